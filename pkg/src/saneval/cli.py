"""Command-line entry points.

Exit codes: 0 for a clean run, 2 when any per-image evaluation errored (the
run still completes and the report is written), 1 for configuration errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import BackendHub, Cassette, HTTPDetector
from .dataset import CATEGORIES, load_dataset
from .errors import SanevalError
from .fixtures import generate_sample_fixture
from .images import ImageStore
from .pipeline import RunConfig, aggregate, run_benchmark
from .report import emit_report, render_table, structured_report
from .stats import spearman


@click.group()
def main() -> None:
    """Compositional adherence scoring for text-to-image outputs."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True),
              help="JSONL manifest of benchmark records.")
@click.option("--images", "image_root", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Image root laid out as {model}/{record_id}.png.")
@click.option("--models", required=True,
              help="Comma-separated generator model names to score.")
@click.option("--categories", default=None,
              help="Comma-separated category filter (default: all).")
@click.option("--cassette", "cassette_mode",
              type=click.Choice(Cassette.MODES), default="off",
              show_default=True)
@click.option("--cassette-path", type=click.Path(), default=None,
              help="Cassette file (required for record/replay).")
@click.option("--no-synonyms", is_flag=True,
              help="Disable synonym expansion before detection.")
@click.option("--concurrency", default=1, show_default=True, type=int)
@click.option("--conf-threshold", default=RunConfig.conf_threshold,
              show_default=True, type=float)
@click.option("--detector-endpoint", default=None,
              help="Base URL of a detector service exposing POST /detect.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Structured report output path (a .txt table is written "
                   "alongside).")
def run(manifest: str, image_root: str, models: str, categories: str | None,
        cassette_mode: str, cassette_path: str | None, no_synonyms: bool,
        concurrency: int, conf_threshold: float, detector_endpoint: str | None,
        out_path: str) -> None:
    """Score every (record, model) image pair and write the report."""
    try:
        if cassette_mode != "off" and not cassette_path:
            raise SanevalError(f"--cassette {cassette_mode} requires "
                               "--cassette-path")
        model_names = [m.strip() for m in models.split(",") if m.strip()]
        if not model_names:
            raise SanevalError("--models must name at least one model")
        records = load_dataset(manifest)
        if categories:
            wanted = {c.strip() for c in categories.split(",") if c.strip()}
            unknown = wanted - set(CATEGORIES)
            if unknown:
                raise SanevalError(f"unknown categories: {sorted(unknown)}")
            records = [r for r in records if r.category in wanted]
        cfg = RunConfig(conf_threshold=conf_threshold,
                        synonym_expansion=not no_synonyms,
                        concurrency=concurrency)
        hub = BackendHub(
            ImageStore(),
            detector=HTTPDetector(detector_endpoint) if detector_endpoint else None,
            cassette=Cassette(mode=cassette_mode, path=cassette_path),
        )
    except SanevalError as exc:
        raise click.ClickException(str(exc)) from exc

    results = run_benchmark(records, model_names, image_root, hub, cfg)
    if cassette_mode == "record":
        hub.cassette.save()
    report = structured_report(aggregate(results), results,
                               synonym_expansion=cfg.synonym_expansion)
    emit_report(report, out_path, formats=("structured", "table-text"))
    click.echo(render_table(report), nl=False)
    click.echo(f"Report written to {out_path}")
    if report["failures"]:
        for r in report["results"]:
            if r["error"]:
                click.echo(f"error: {r['record_id']}/{r['model']}: {r['error']}",
                           err=True)
        sys.exit(2)


def _load_scores(path: str) -> dict[str, float]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        return {str(k): float(v) for k, v in doc.items()}
    raise SanevalError(f"{path}: expected a JSON object of id -> score")


@main.command()
@click.option("--ours", required=True, type=click.Path(exists=True),
              help="JSON object mapping item id -> score from this harness.")
@click.option("--theirs", required=True, type=click.Path(exists=True),
              help="JSON object mapping item id -> score from another rater.")
def correlate(ours: str, theirs: str) -> None:
    """Spearman rank correlation between two score files over shared ids."""
    try:
        a = _load_scores(ours)
        b = _load_scores(theirs)
        shared = sorted(set(a) & set(b))
        if not shared:
            raise SanevalError("no shared item ids between the two files")
        result = spearman([a[k] for k in shared], [b[k] for k in shared])
    except SanevalError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"n = {result.n}")
    click.echo(f"rho = {result.rho:.6f}")
    click.echo(f"p = {result.p_value:.6g} ({result.method})")


@main.command()
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
def fixtures(seed: int, out_dir: str) -> None:
    """Generate the offline sample fixture (manifest, images, cassette)."""
    paths = generate_sample_fixture(seed, out_dir)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
