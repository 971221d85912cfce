import json

import pytest

from saneval.fixtures import fixture_hub, generate_sample_fixture
from saneval.dataset import load_dataset
from saneval.pipeline import RunConfig, aggregate, run_benchmark
from saneval.report import structured_report


@pytest.fixture(scope="session")
def sample_fixture(tmp_path_factory):
    """The offline benchmark fixture, generated once per test session."""
    out = tmp_path_factory.mktemp("fixture")
    generate_sample_fixture(seed=0, out_dir=out)
    return out


@pytest.fixture(scope="session")
def replay_run(sample_fixture):
    """Callable running the whole benchmark in replay mode with config
    overrides; returns (results, report dict)."""

    def run(**overrides):
        cfg = RunConfig(**overrides)
        records = load_dataset(sample_fixture / "manifest.jsonl")
        hub = fixture_hub(sample_fixture, mode="replay")
        results = run_benchmark(records, ["alpha", "bravo"],
                                sample_fixture / "images", hub, cfg)
        report = structured_report(aggregate(results), results,
                                   synonym_expansion=cfg.synonym_expansion)
        return results, report

    return run


@pytest.fixture(scope="session")
def replay_results(replay_run):
    """Default-config replay results keyed by (record_id, model)."""
    results, report = replay_run()
    by_key = {(r.record_id, r.model_name): r for r in results}
    return by_key, report


def result_digest(report: dict) -> str:
    import hashlib

    return hashlib.sha256(
        json.dumps(report, sort_keys=True).encode()).hexdigest()
