"""Geometric verification of spatial triplets over detected bounding boxes.

All predicates depend only on relative geometry (centroid deltas, interval
overlaps, containment ratios), so verdicts are translation invariant and the
left/right and above/below pairs are exact mirrors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .detection import ObjectMapping, select_instance
from .errors import UnsupportedRelation
from .geometry import BBox
from .results import ScoreResult

DEFAULT_RELATIONS: tuple[str, ...] = (
    "to the left of",
    "to the right of",
    "above",
    "below",
    "on top of",
    "on the bottom of",
    "next to",
    "inside",
)

NO_RELATION_FEEDBACK = "No spatial relation extracted from prompt"


@dataclass(frozen=True)
class SpatialThresholds:
    on_top_overlap: float = 0.25       # horizontal overlap ratio floor
    on_top_gap: float = 0.2            # vertical gap cap, fraction of height(B)
    bottom_containment: float = 0.5    # intersection/area(A) floor
    inside_containment: float = 0.9    # intersection/area(A) floor
    next_to_diag_factor: float = 1.0   # times the average box diagonal


@dataclass
class SpatialVerdict:
    holds: bool
    trace: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, value in self.trace.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite trace value {key}={value}")


def _h_overlap_ratio(a: BBox, b: BBox) -> float:
    overlap = min(a.x2, b.x2) - max(a.x1, b.x1)
    return max(overlap, 0.0) / min(a.width, b.width)


def evaluate_relation(rel: str, box_a: BBox, box_b: BBox,
                      thresholds: SpatialThresholds | None = None,
                      relation_set: tuple[str, ...] = DEFAULT_RELATIONS,
                      ) -> SpatialVerdict:
    """Decide whether "A <rel> B" holds for the two boxes (y grows downward)."""
    if rel not in relation_set:
        raise UnsupportedRelation(f"relation {rel!r} outside the configured set")
    t = thresholds or SpatialThresholds()
    cxa, cya = box_a.centroid
    cxb, cyb = box_b.centroid
    dx = cxb - cxa
    dy = cyb - cya
    trace = {"dx": dx, "dy": dy}

    def above() -> bool:
        return dy > 0 and abs(dy) > abs(dx)

    if rel == "to the left of":
        holds = dx > 0 and abs(dx) > abs(dy)
    elif rel == "to the right of":
        holds = dx < 0 and abs(dx) > abs(dy)
    elif rel == "above":
        holds = above()
    elif rel == "below":
        holds = dy < 0 and abs(dy) > abs(dx)
    elif rel == "on top of":
        overlap = _h_overlap_ratio(box_a, box_b)
        gap = box_b.y1 - box_a.y2
        trace.update({"h_overlap_ratio": overlap, "v_gap": gap})
        holds = (above() and overlap >= t.on_top_overlap
                 and gap <= t.on_top_gap * box_b.height)
    elif rel == "on the bottom of":
        containment = box_a.intersection_area(box_b) / box_a.area
        lower_third = box_b.y1 + 2.0 * box_b.height / 3.0
        trace.update({"containment": containment, "lower_third_y": lower_third})
        holds = (containment >= t.bottom_containment
                 and lower_third <= cya <= box_b.y2)
    elif rel == "next to":
        dist = math.hypot(dx, dy)
        avg_diag = (box_a.diagonal + box_b.diagonal) / 2.0
        nested = (box_a.intersection_area(box_b) / box_a.area >= t.inside_containment
                  or box_b.intersection_area(box_a) / box_b.area >= t.inside_containment)
        trace.update({"centroid_dist": dist, "avg_diagonal": avg_diag})
        holds = dist <= t.next_to_diag_factor * avg_diag and not nested
    elif rel == "inside":
        containment = box_a.intersection_area(box_b) / box_a.area
        trace["containment"] = containment
        holds = containment >= t.inside_containment
    else:
        raise UnsupportedRelation(f"relation {rel!r} has no predicate")
    return SpatialVerdict(holds=holds, trace=trace)


def score_spatial(relations: list[tuple[str, str, str]], mapping: ObjectMapping,
                  thresholds: SpatialThresholds | None = None,
                  relation_set: tuple[str, ...] = DEFAULT_RELATIONS,
                  strict: bool = False) -> ScoreResult:
    """Per-relation ladder: 1.0 both objects present and predicate holds,
    0.5 both present but violated (0.0 in strict mode), 0.0 on a missing
    object. Image score is the mean over scoreable relations; relations
    outside the configured set are reported and excluded from the mean."""
    if not relations:
        return ScoreResult(score=0.0, feedback=[NO_RELATION_FEEDBACK])

    scores: list[float] = []
    feedback: list[str] = []
    items: list[dict] = []
    for obj1, rel, obj2 in relations:
        prefix = f"Expected {obj1} {rel} {obj2}"
        if rel not in relation_set:
            feedback.append(f"{prefix}: unsupported relation")
            continue
        box_a = select_instance(mapping, obj1)
        box_b = select_instance(mapping, obj2)
        missing = [o for o, det in ((obj1, box_a), (obj2, box_b)) if det is None]
        if missing:
            scores.append(0.0)
            for obj in missing:
                feedback.append(f"{prefix}: Missing object: {obj}")
            items.append({"relation": [obj1, rel, obj2], "score": 0.0,
                          "missing": missing})
            continue
        verdict = evaluate_relation(rel, box_a.bbox, box_b.bbox,
                                    thresholds, relation_set)
        if verdict.holds:
            scores.append(1.0)
        else:
            scores.append(0.0 if strict else 0.5)
            feedback.append(f"{prefix}: relation not satisfied")
        items.append({"relation": [obj1, rel, obj2], "score": scores[-1],
                      "trace": verdict.trace})

    score = sum(scores) / len(scores) if scores else 0.0
    return ScoreResult(score=score, feedback=feedback, items=items)
