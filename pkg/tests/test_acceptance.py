"""Acceptance gate: every primary criterion as one test with a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` for the per-criterion lines.
"""

import random
import time
from itertools import permutations

import pytest

from saneval.geometry import BBox
from saneval.numeracy import CountComparison
from saneval.parsing import NUMBER_WORDS
from saneval.spatial import DEFAULT_RELATIONS, evaluate_relation
from saneval.stats import average_ranks, spearman

from test_spatial import oracle as spatial_oracle, random_box
from test_stats import oracle_rho_float


def _passed(name):
    print(f"ACCEPTANCE {name}: PASS")


def test_worked_example_spatial(replay_results):
    """Spatial worked example: missing painting scores 0.0 with the exact
    missing-object feedback."""
    by_key, _ = replay_results
    result = by_key[("spatial-2-mouse-painting", "alpha")]
    assert result.score == pytest.approx(0.0, abs=1e-4)
    assert any("Missing object: painting" in line for line in result.feedback)
    assert result.feedback == [
        "Expected mouse on the bottom of painting: Missing object: painting"]
    _passed("worked-example-spatial")


def test_worked_example_numeracy(replay_results):
    """Numeracy worked example: four expected, two detected -> 0.5."""
    by_key, _ = replay_results
    result = by_key[("numeracy-4-trucks", "alpha")]
    assert result.score == pytest.approx(0.5, abs=1e-4)
    assert result.feedback == ["two trucks missing"]
    _passed("worked-example-numeracy")


def test_worked_example_color(replay_results):
    """Color worked example: one object missing, the other judged 0.20.

    The per-module mean over (object, attribute) pairs makes the image score
    (0.0 + 0.20) / 2 = 0.10; the feedback carries the 0.20-level similarity.
    """
    by_key, _ = replay_results
    result = by_key[("color-2-shirt-apple", "alpha")]
    assert result.score == pytest.approx(0.10, abs=1e-4)
    assert "Missing object: shirt [brown]" in result.feedback
    assert any("score = 0.20 < 0.75" in line for line in result.feedback)
    _passed("worked-example-color")


def test_suitcase_scenario(replay_results):
    """Expected {suitcase:3, person:2}, detected {suitcase:5, person:1}."""
    by_key, _ = replay_results
    result = by_key[("numeracy-5-suitcases", "alpha")]
    assert result.score == 0.5
    assert result.feedback == [
        "two extra suitcases detected; one person missing"]
    _passed("suitcase-scenario")


def test_adherent_and_partial_pair(replay_results):
    """Fully adherent image scores 1.0 with empty feedback; dropping one of
    two objects scores exactly 0.5."""
    by_key, _ = replay_results
    adherent = by_key[("color-2-adherent", "alpha")]
    assert adherent.score == 1.0
    assert adherent.feedback == []
    partial = by_key[("color-2-partial", "alpha")]
    assert partial.score == 0.5
    _passed("adherent-partial-pair")


def test_geometry_oracle_equivalence():
    """All eight predicates vs an independent brute-force oracle on 10,000
    seeded pairs, plus mirror/flip properties on 10,000 more; < 10 s."""
    start = time.monotonic()
    rng = random.Random(20240817)
    disagreements = 0
    for _ in range(10_000):
        a, b = random_box(rng), random_box(rng)
        for rel in DEFAULT_RELATIONS:
            if evaluate_relation(rel, BBox(*a), BBox(*b)).holds != \
                    spatial_oracle(rel, a, b):
                disagreements += 1
    for _ in range(10_000):
        a, b = random_box(rng), random_box(rng)
        if evaluate_relation("to the left of", BBox(*a), BBox(*b)).holds != \
                evaluate_relation("to the right of", BBox(*b), BBox(*a)).holds:
            disagreements += 1
        if evaluate_relation("above", BBox(*a), BBox(*b)).holds != \
                evaluate_relation("below", BBox(*b), BBox(*a)).holds:
            disagreements += 1
        span = 600.0
        fa = (span - a[2], a[1], span - a[0], a[3])
        fb = (span - b[2], b[1], span - b[0], b[3])
        if evaluate_relation("to the left of", BBox(*a), BBox(*b)).holds != \
                evaluate_relation("to the right of", BBox(*fa), BBox(*fb)).holds:
            disagreements += 1
    elapsed = time.monotonic() - start
    assert disagreements == 0
    assert elapsed < 10.0
    _passed("geometry-oracle-equivalence")


def test_numeracy_ladder_315_cells():
    """item_score follows the 1.0 / 0.5 / 0.0 ladder on all 315 cells."""
    checked = 0
    for expected in range(1, 16):
        for detected in range(0, 21):
            want = (1.0 if detected == expected
                    else 0.0 if detected == 0 else 0.5)
            assert CountComparison("cat", expected, detected).item_score == want
            checked += 1
    assert checked == 315
    _passed("numeracy-ladder-315")


def test_spearman_exact_permutations():
    """rho exact and p within 1e-12 of enumeration for all 120 orderings of
    n=5; identity/reversal correlations for random n <= 50."""
    x = [1.0, 2.0, 3.0, 4.0, 5.0]
    base = list(range(1, 6))
    oracle_by_perm = {p: oracle_rho_float(base, list(p))
                      for p in permutations(base)}
    for perm in permutations([1.0, 2.0, 3.0, 4.0, 5.0]):
        result = spearman(x, list(perm))
        ranks = tuple(average_ranks(list(perm)))
        want_rho = oracle_by_perm[ranks]
        assert result.rho == want_rho
        hits = sum(abs(r) >= abs(want_rho) - 1e-12
                   for r in oracle_by_perm.values())
        assert abs(result.p_value - hits / 120) <= 1e-12
    rng = random.Random(11)
    for n in (3, 10, 27, 50):
        xs = [rng.uniform(-5, 5) for _ in range(n)]
        assert spearman(xs, xs).rho == pytest.approx(1.0)
        assert spearman(xs, [-v for v in xs]).rho == pytest.approx(-1.0)
    _passed("spearman-exact")


def test_synonym_ablation_direction(replay_run):
    """Disabling expansion strictly lowers the numeracy mean and the
    unique-objects-detected count on the rare-object fixture set."""
    _, with_syn = replay_run()
    _, without_syn = replay_run(synonym_expansion=False)
    for model in ("alpha", "bravo"):
        on = with_syn["scores"][model]["numeracy"]["mean"]
        off = without_syn["scores"][model]["numeracy"]["mean"]
        assert off < on, (model, on, off)
    assert (without_syn["unique_objects_detected"]
            < with_syn["unique_objects_detected"])
    _passed("synonym-ablation-direction")


def test_number_word_conversions():
    """Every documented word-to-integer conversion, exactly."""
    conversions = {
        "one": 1, "a": 1, "an": 1, "single": 1,
        "two": 2, "couple": 2,
        "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7,
        "eight": 8, "nine": 9, "ten": 10,
        "dozen": 12, "hundred": 100,
    }
    for word, value in conversions.items():
        assert NUMBER_WORDS[word] == value
    assert NUMBER_WORDS == conversions
    _passed("number-word-table")


def test_end_to_end_determinism(replay_run, tmp_path):
    """Two replay runs emit byte-identical structured reports; concurrency 1
    vs 8 is identical after id-normalization."""
    import json

    _, first = replay_run()
    _, second = replay_run()
    _, wide = replay_run(concurrency=8)
    blob = lambda doc: json.dumps(doc, sort_keys=True).encode()  # noqa: E731
    assert blob(first) == blob(second)
    assert blob(first) == blob(wide)
    _passed("end-to-end-determinism")
