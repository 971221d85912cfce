import math
import random

import pytest

from saneval.detection import ObjectMapping, SynonymExpansion, map_detections
from saneval.errors import UnsupportedRelation
from saneval.geometry import BBox, Detection
from saneval.spatial import (DEFAULT_RELATIONS, NO_RELATION_FEEDBACK,
                             evaluate_relation, score_spatial)


# --- independent oracle, written from the predicate definitions over raw
# --- coordinate tuples, sharing no code with the implementation ------------

def oracle(rel, a, b):
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    cxa, cya = (ax1 + ax2) / 2, (ay1 + ay2) / 2
    cxb, cyb = (bx1 + bx2) / 2, (by1 + by2) / 2
    dx, dy = cxb - cxa, cyb - cya

    def inter(p, q):
        w = min(p[2], q[2]) - max(p[0], q[0])
        h = min(p[3], q[3]) - max(p[1], q[1])
        return w * h if w > 0 and h > 0 else 0.0

    def area(p):
        return (p[2] - p[0]) * (p[3] - p[1])

    if rel == "to the left of":
        return dx > 0 and abs(dx) > abs(dy)
    if rel == "to the right of":
        return dx < 0 and abs(dx) > abs(dy)
    if rel == "above":
        return dy > 0 and abs(dy) > abs(dx)
    if rel == "below":
        return dy < 0 and abs(dy) > abs(dx)
    if rel == "on top of":
        h_overlap = max(min(ax2, bx2) - max(ax1, bx1), 0.0)
        ratio = h_overlap / min(ax2 - ax1, bx2 - bx1)
        gap = by1 - ay2
        return (dy > 0 and abs(dy) > abs(dx) and ratio >= 0.25
                and gap <= 0.2 * (by2 - by1))
    if rel == "on the bottom of":
        containment = inter(a, b) / area(a)
        return (containment >= 0.5
                and by1 + 2 * (by2 - by1) / 3 <= cya <= by2)
    if rel == "next to":
        dist = math.hypot(dx, dy)
        diag_a = math.hypot(ax2 - ax1, ay2 - ay1)
        diag_b = math.hypot(bx2 - bx1, by2 - by1)
        nested = (inter(a, b) / area(a) >= 0.9
                  or inter(b, a) / area(b) >= 0.9)
        return dist <= (diag_a + diag_b) / 2 and not nested
    if rel == "inside":
        return inter(a, b) / area(a) >= 0.9
    raise AssertionError(rel)


def random_box(rng, span=200.0):
    x1 = rng.uniform(0, span)
    y1 = rng.uniform(0, span)
    return (x1, y1, x1 + rng.uniform(0.5, span / 2),
            y1 + rng.uniform(0.5, span / 2))


def test_oracle_agreement_10k_pairs():
    rng = random.Random(1234)
    for _ in range(10_000):
        a, b = random_box(rng), random_box(rng)
        for rel in DEFAULT_RELATIONS:
            got = evaluate_relation(rel, BBox(*a), BBox(*b)).holds
            assert got == oracle(rel, a, b), (rel, a, b)


def test_mirror_and_flip_properties_10k_pairs():
    rng = random.Random(987)
    mirrors = {"to the left of": "to the right of",
               "above": "below"}
    for _ in range(10_000):
        a, b = random_box(rng), random_box(rng)
        for rel, opposite in mirrors.items():
            # swapping argument order mirrors the directional relations
            assert (evaluate_relation(rel, BBox(*a), BBox(*b)).holds
                    == evaluate_relation(opposite, BBox(*b), BBox(*a)).holds)
        # horizontal flip swaps left/right and preserves above/below
        span = 500.0
        fa = (span - a[2], a[1], span - a[0], a[3])
        fb = (span - b[2], b[1], span - b[0], b[3])
        assert (evaluate_relation("to the left of", BBox(*a), BBox(*b)).holds
                == evaluate_relation("to the right of", BBox(*fa), BBox(*fb)).holds)
        assert (evaluate_relation("above", BBox(*a), BBox(*b)).holds
                == evaluate_relation("above", BBox(*fa), BBox(*fb)).holds)


def test_unsupported_relation_raises():
    with pytest.raises(UnsupportedRelation):
        evaluate_relation("behind", BBox(0, 0, 1, 1), BBox(2, 2, 3, 3))


def test_nested_boxes_are_not_next_to():
    outer = BBox(0, 0, 100, 100)
    inner = BBox(40, 40, 60, 60)
    assert not evaluate_relation("next to", inner, outer).holds
    assert not evaluate_relation("next to", outer, inner).holds
    assert evaluate_relation("inside", inner, outer).holds
    assert not evaluate_relation("inside", outer, inner).holds


def _mapping(**boxes):
    dets = [Detection(obj, 0.9, BBox(*box)) for obj, box in boxes.items()]
    exp = SynonymExpansion({obj: [obj] for obj in boxes})
    return map_detections(dets, exp)


def test_score_no_relations():
    result = score_spatial([], ObjectMapping())
    assert result.score == 0.0
    assert result.feedback == [NO_RELATION_FEEDBACK]


def test_score_relation_holds():
    mapping = _mapping(dog=(0, 100, 50, 150), table=(200, 100, 300, 160))
    result = score_spatial([("dog", "to the left of", "table")], mapping)
    assert result.score == 1.0
    assert result.feedback == []


def test_score_relation_violated_half_credit():
    mapping = _mapping(dog=(200, 100, 300, 160), table=(0, 100, 50, 150))
    result = score_spatial([("dog", "to the left of", "table")], mapping)
    assert result.score == 0.5
    assert result.feedback == [
        "Expected dog to the left of table: relation not satisfied"]


def test_score_relation_violated_strict_mode():
    mapping = _mapping(dog=(200, 100, 300, 160), table=(0, 100, 50, 150))
    result = score_spatial([("dog", "to the left of", "table")], mapping,
                           strict=True)
    assert result.score == 0.0


def test_score_missing_object():
    mapping = _mapping(mouse=(100, 400, 140, 430))
    result = score_spatial([("mouse", "on the bottom of", "painting")], mapping)
    assert result.score == 0.0
    assert result.feedback == [
        "Expected mouse on the bottom of painting: Missing object: painting"]


def test_score_mean_over_relations():
    mapping = _mapping(cat=(220, 240, 300, 305), chair=(200, 300, 320, 450),
                       lamp=(340, 320, 400, 450))
    relations = [("cat", "on top of", "chair"), ("lamp", "next to", "chair")]
    assert score_spatial(relations, mapping).score == 1.0
    # drop the lamp: one 1.0 and one missing-object 0.0
    mapping2 = _mapping(cat=(220, 240, 300, 305), chair=(200, 300, 320, 450))
    mapping2.matched["lamp"] = []
    assert score_spatial(relations, mapping2).score == 0.5


def test_unsupported_relation_excluded_from_mean():
    mapping = _mapping(dog=(0, 100, 50, 150), table=(200, 100, 300, 160))
    result = score_spatial([("dog", "to the left of", "table"),
                            ("dog", "behind", "table")], mapping)
    assert result.score == 1.0
    assert "Expected dog behind table: unsupported relation" in result.feedback
