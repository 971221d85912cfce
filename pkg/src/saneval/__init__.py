"""Compositional adherence scoring for text-to-image outputs: structured
prompt understanding, synonym-expanded open-vocabulary detection, and
geometric/similarity scorers with diagnostic feedback."""

from .backends import BackendHub, BackendRequest, BackendResponse, Cassette
from .dataset import PromptRecord, load_dataset, save_dataset
from .errors import SanevalError
from .geometry import BBox, Detection
from .images import ImageStore
from .parsing import ParsedPrompt, PromptParser
from .pipeline import (AggregateReport, ImageResult, RunConfig, aggregate,
                       evaluate_image, run_benchmark)
from .report import emit_report, structured_report
from .results import ScoreResult
from .stats import CorrelationResult, spearman

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "BBox",
    "BackendHub",
    "BackendRequest",
    "BackendResponse",
    "Cassette",
    "CorrelationResult",
    "Detection",
    "ImageResult",
    "ImageStore",
    "ParsedPrompt",
    "PromptRecord",
    "PromptParser",
    "RunConfig",
    "SanevalError",
    "ScoreResult",
    "aggregate",
    "emit_report",
    "evaluate_image",
    "load_dataset",
    "run_benchmark",
    "save_dataset",
    "spearman",
    "structured_report",
    "__version__",
]
