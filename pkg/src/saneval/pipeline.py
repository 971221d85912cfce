"""Per-image evaluation orchestration and aggregation.

evaluate_image runs parse -> synonym expansion -> detection -> the scorer
matching the record's category. Backend failures become evaluation-error
results; the run continues and the failure tally is reported.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .attributes import AttributeScorer, AttributeThresholds
from .backends import BackendHub, DEFAULT_CONF_THRESHOLD
from .dataset import PromptRecord, bucket_of, image_path
from .detection import (ObjectMapping, SynonymExpander, dedup_mapping,
                        map_detections, run_detection)
from .errors import ConfigError, SanevalError
from .geometry import Detection
from .numeracy import score_numeracy
from .parsing import ATTRIBUTE_TYPES, ParsedPrompt, PromptParser
from .results import ScoreResult
from .spatial import DEFAULT_RELATIONS, SpatialThresholds, score_spatial


@dataclass
class RunConfig:
    text_model: str = "text-judge"
    visual_model: str = "visual-judge"
    detector_model: str = "detector"
    conf_threshold: float = DEFAULT_CONF_THRESHOLD
    synonym_expansion: bool = True
    relation_set: tuple[str, ...] = DEFAULT_RELATIONS
    spatial_thresholds: SpatialThresholds = field(default_factory=SpatialThresholds)
    spatial_strict: bool = False
    attribute_thresholds: AttributeThresholds = field(
        default_factory=AttributeThresholds)
    concurrency: int = 1
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ConfigError("conf_threshold must be within [0, 1]")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be within (0, 1)")

    def without_synonyms(self) -> "RunConfig":
        return replace(self, synonym_expansion=False)


@dataclass
class ImageResult:
    record_id: str
    model_name: str
    category: str
    object_count: int
    score: Optional[float]
    feedback: list[str] = field(default_factory=list)
    detections: list[Detection] = field(default_factory=list)
    parsed: Optional[ParsedPrompt] = None
    matched_objects: list[str] = field(default_factory=list)
    error: Optional[str] = None
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class AggregateReport:
    # (model, category) -> {"mean": float, "count": int}
    cells: dict[tuple[str, str], dict] = field(default_factory=dict)
    # (model, category, bucket) -> mean
    bucket_means: dict[tuple[str, str, str], float] = field(default_factory=dict)
    unique_objects_detected: int = 0
    failures: int = 0
    n_results: int = 0


def evaluate_image(record: PromptRecord, model_name: str, image_ref: str,
                   hub: BackendHub, cfg: RunConfig) -> ImageResult:
    start = time.monotonic()
    try:
        result = _evaluate(record, model_name, image_ref, hub, cfg)
    except SanevalError as exc:
        return ImageResult(record_id=record.id, model_name=model_name,
                           category=record.category,
                           object_count=record.object_count,
                           score=None, error=str(exc))
    result.timings["total_s"] = time.monotonic() - start
    return result


def _evaluate(record: PromptRecord, model_name: str, image_ref: str,
              hub: BackendHub, cfg: RunConfig) -> ImageResult:
    if record.expected is not None:
        parsed = record.expected
    else:
        parser = PromptParser(hub, cfg.text_model, cfg.relation_set)
        attr_type = record.category if record.category in ATTRIBUTE_TYPES else None
        parsed = parser.parse(record.prompt, attr_type=attr_type)

    if parsed.objects:
        expander = SynonymExpander(hub, cfg.text_model,
                                   enabled=cfg.synonym_expansion)
        expansion = expander.expand(parsed.objects)
        detections = run_detection(hub, image_ref, expansion, cfg.conf_threshold)
        mapping = dedup_mapping(map_detections(detections, expansion))
    else:
        detections = []
        mapping = ObjectMapping()

    score = _score_category(record.category, parsed, mapping, image_ref, hub, cfg)
    return ImageResult(
        record_id=record.id,
        model_name=model_name,
        category=record.category,
        object_count=record.object_count,
        score=score.score,
        feedback=list(score.feedback),
        detections=detections,
        parsed=parsed,
        matched_objects=sorted(o for o, dets in mapping.matched.items() if dets),
    )


def _score_category(category: str, parsed: ParsedPrompt, mapping: ObjectMapping,
                    image_ref: str, hub: BackendHub,
                    cfg: RunConfig) -> ScoreResult:
    if category == "spatial":
        return score_spatial(parsed.relations, mapping,
                             thresholds=cfg.spatial_thresholds,
                             relation_set=cfg.relation_set,
                             strict=cfg.spatial_strict)
    if category == "numeracy":
        return score_numeracy(parsed.counts, mapping)
    if category in ATTRIBUTE_TYPES:
        attrs = {obj: [(t, v) for t, v in pairs if t == category]
                 for obj, pairs in parsed.attributes.items()}
        attrs = {obj: pairs for obj, pairs in attrs.items() if pairs}
        scorer = AttributeScorer(hub, cfg.text_model, cfg.visual_model,
                                 cfg.attribute_thresholds)
        return scorer.score_attributes(attrs, mapping, image_ref)
    raise ConfigError(f"unknown category {category!r}")


def run_benchmark(records: list[PromptRecord], models: list[str],
                  image_root: str | Path, hub: BackendHub,
                  cfg: RunConfig) -> list[ImageResult]:
    """Evaluate every (record, model) pair with bounded concurrency; output
    order is normalized by (record id, model) so results are identical for
    any concurrency limit."""
    pairs = [(record, model) for record in records for model in models]

    def one(pair: tuple[PromptRecord, str]) -> ImageResult:
        record, model = pair
        path = image_path(image_root, model, record.id)
        if not path.exists():
            return ImageResult(record_id=record.id, model_name=model,
                               category=record.category,
                               object_count=record.object_count, score=None,
                               error=f"missing image {path}")
        image_ref = hub.store.put_file(path)
        return evaluate_image(record, model, image_ref, hub, cfg)

    if cfg.concurrency == 1:
        results = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            results = list(pool.map(one, pairs))
    return sorted(results, key=lambda r: (r.record_id, r.model_name))


def aggregate(results: list[ImageResult]) -> AggregateReport:
    """Group means by (model, category) and cardinality bucket; failed
    evaluations are excluded from means but tallied."""
    report = AggregateReport(n_results=len(results))
    by_cell: dict[tuple[str, str], list[float]] = {}
    by_bucket: dict[tuple[str, str, str], list[float]] = {}
    unique_objects: set[str] = set()
    for r in results:
        if r.error is not None or r.score is None:
            report.failures += 1
            continue
        by_cell.setdefault((r.model_name, r.category), []).append(r.score)
        bucket = bucket_of(r.object_count)
        by_bucket.setdefault((r.model_name, r.category, bucket), []).append(r.score)
        unique_objects.update(r.matched_objects)
    report.cells = {key: {"mean": sum(v) / len(v), "count": len(v)}
                    for key, v in by_cell.items()}
    report.bucket_means = {key: sum(v) / len(v) for key, v in by_bucket.items()}
    report.unique_objects_detected = len(unique_objects)
    return report
