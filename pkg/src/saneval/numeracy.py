"""Numeracy scoring: compare expected counts against deduplicated detections
on the {1.0, 0.5, 0.0} ladder and spell out over/under-generation."""

from __future__ import annotations

from dataclasses import dataclass

from .detection import ObjectMapping
from .results import ScoreResult

NO_COUNTS_FEEDBACK = "No object counts extracted from prompt"

_SMALL_WORDS = ("zero", "one", "two", "three", "four", "five",
                "six", "seven", "eight", "nine", "ten")

_IRREGULAR_PLURALS = {
    "person": "people",
    "man": "men",
    "woman": "women",
    "child": "children",
    "mouse": "mice",
    "goose": "geese",
    "foot": "feet",
    "tooth": "teeth",
    "sheep": "sheep",
    "fish": "fish",
    "deer": "deer",
}


def number_to_words(n: int) -> str:
    """Numerals up to ten are spelled as lowercase words, larger as digits."""
    return _SMALL_WORDS[n] if 0 <= n <= 10 else str(n)


def pluralize(obj: str, n: int) -> str:
    if n == 1:
        return obj
    return _IRREGULAR_PLURALS.get(obj, obj + "s")


@dataclass(frozen=True)
class CountComparison:
    object: str
    expected: int
    detected: int

    def __post_init__(self) -> None:
        if self.expected < 1:
            raise ValueError("expected count must be positive")
        if self.detected < 0:
            raise ValueError("detected count must be nonnegative")

    @property
    def item_score(self) -> float:
        if self.detected == self.expected:
            return 1.0
        if self.detected == 0:
            return 0.0
        return 0.5

    def feedback(self) -> str | None:
        if self.detected == self.expected:
            return None
        if self.detected == 0:
            return f"Missing object: {self.object}"
        if self.detected > self.expected:
            extra = self.detected - self.expected
            return (f"{number_to_words(extra)} extra "
                    f"{pluralize(self.object, extra)} detected")
        short = self.expected - self.detected
        return f"{number_to_words(short)} {pluralize(self.object, short)} missing"


def count_instances(mapping: ObjectMapping, obj: str) -> int:
    """Instance count for one expected object; the mapping is assumed to be
    deduplicated already."""
    return len(mapping.matched.get(obj, []))


def score_numeracy(counts: dict[str, int], mapping: ObjectMapping) -> ScoreResult:
    """Mean of per-object ladder scores, feedback joined in expected-object
    order."""
    if not counts:
        return ScoreResult(score=0.0, feedback=[NO_COUNTS_FEEDBACK])
    comparisons = [CountComparison(obj, expected, count_instances(mapping, obj))
                   for obj, expected in counts.items()]
    score = sum(c.item_score for c in comparisons) / len(comparisons)
    lines = [line for c in comparisons if (line := c.feedback()) is not None]
    feedback = ["; ".join(lines)] if lines else []
    return ScoreResult(score=score, feedback=feedback, items=comparisons)
