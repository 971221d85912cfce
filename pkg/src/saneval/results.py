"""Shared score container for the three category scorers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ScoreResult:
    """Per-image, per-category score in [0, 1] with ordered diagnostic
    feedback strings; empty feedback means full adherence."""

    score: float
    feedback: list[str] = field(default_factory=list)
    items: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
