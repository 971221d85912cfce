"""Attribute binding evaluation: crop each expected object, ask the visual
backend a fixed attribute question, and judge the free-text answer against
the expected value on a [0, 1] similarity scale.

The outgoing visual request never contains the expected attribute value, so
the judge cannot be biased by expectation leakage.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import assets
from .backends import BackendHub, BackendRequest
from .detection import ObjectMapping, crop, select_instance
from .results import ScoreResult

ATTRIBUTE_QUESTIONS = {
    "color": "What color is the object?",
    "shape": "What shape is the object?",
    "texture": "What texture does the object have?",
}


@dataclass(frozen=True)
class AttributeThresholds:
    feedback_threshold: float = 0.75
    missing_flag_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.missing_flag_threshold <= self.feedback_threshold <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= missing <= feedback <= 1")


@dataclass
class AttributeJudgment:
    object: str
    attr_type: str
    expected: str
    predicted: str
    similarity: float
    missing_object: bool = False
    unscorable: bool = False

    def __post_init__(self) -> None:
        if self.missing_object and self.similarity != 0.0:
            raise ValueError("missing object implies similarity 0.0")
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError("similarity outside [0, 1]")


def question_for(attr_type: str) -> str:
    return ATTRIBUTE_QUESTIONS[attr_type]


_NUMBER_RE = re.compile(r"[-+]?\d*\.?\d+")


class AttributeScorer:
    def __init__(self, hub: BackendHub, text_model: str, visual_model: str,
                 thresholds: AttributeThresholds | None = None) -> None:
        self.hub = hub
        self.text_model = text_model
        self.visual_model = visual_model
        self.thresholds = thresholds or AttributeThresholds()

    def query_attribute(self, crop_ref: str, attr_type: str) -> str:
        req = BackendRequest.visual(self.visual_model, question_for(attr_type),
                                    crop_ref)
        return self.hub.answer_visual(req).text

    def judge_similarity(self, predicted: str, expected: str) -> float | None:
        """Prompt-8 similarity in [0, 1]; None when unparseable after one
        re-ask (caller records the pair as unscorable)."""
        if not predicted or not expected:
            raise ValueError("predicted and expected must be nonempty")
        rendered = assets.render("similarity_prompt.txt",
                                 expected_attribute=expected, response=predicted)
        for prompt_text in (rendered, rendered + assets.REASK_SUFFIX):
            reply = self.hub.complete_text(
                BackendRequest.text(self.text_model, prompt_text)).text
            match = _NUMBER_RE.search(reply)
            if match:
                return min(max(float(match.group()), 0.0), 1.0)
        return None

    def score_attributes(self, attributes: dict[str, list[tuple[str, str]]],
                         mapping: ObjectMapping, image_ref: str) -> ScoreResult:
        """Mean similarity over all (object, attribute) pairs; missing objects
        contribute 0.0. Feedback lines are gated by the thresholds."""
        if not attributes:
            return ScoreResult(score=0.0,
                               feedback=["No attributes extracted from prompt"])
        t = self.thresholds
        judgments: list[AttributeJudgment] = []
        feedback: list[str] = []
        for obj, pairs in attributes.items():
            instance = select_instance(mapping, obj)
            crop_ref = None
            for attr_type, expected in pairs:
                if instance is None:
                    judgments.append(AttributeJudgment(
                        obj, attr_type, expected, "", 0.0, missing_object=True))
                    feedback.append(f"Missing object: {obj} [{expected}]")
                    continue
                if crop_ref is None:
                    crop_ref = crop(self.hub.store, image_ref, instance.bbox)
                predicted = self.query_attribute(crop_ref, attr_type)
                similarity = self.judge_similarity(predicted, expected)
                if similarity is None:
                    judgments.append(AttributeJudgment(
                        obj, attr_type, expected, predicted, 0.0, unscorable=True))
                    feedback.append(f"Unscorable attribute for {obj}: [{expected}]")
                    continue
                judgments.append(AttributeJudgment(
                    obj, attr_type, expected, predicted, similarity))
                if similarity < t.feedback_threshold:
                    feedback.append(
                        f"Poor attribute binding for {obj}: expected "
                        f"[{expected}], score = {similarity:.2f} "
                        f"< {t.feedback_threshold:.2f}")
                if similarity < t.missing_flag_threshold:
                    feedback.append(f"Missing attribute for {obj}: [{expected}]")
        score = sum(j.similarity for j in judgments) / len(judgments)
        return ScoreResult(score=score, feedback=feedback, items=judgments)
