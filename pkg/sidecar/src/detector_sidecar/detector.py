"""Color-keyed open-vocabulary detector.

The "weights" are a JSON file mapping solid sprite colors to class labels
with calibrated confidences. Detection scans the image for pixels of each
known color and reports the tight bounding box per color. This keeps the
service fully deterministic while exercising the exact wire protocol a
neural detector would sit behind; swapping in a real model only means
replacing this class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class Weights:
    model_id: str
    # hex color -> (label, confidence)
    labels: dict[str, tuple[str, float]]


def load_weights(path: str | Path) -> Weights:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    labels = {}
    for color, entry in doc["labels"].items():
        color = color.lower()
        if len(color) != 6 or set(color) - set("0123456789abcdef"):
            raise ValueError(f"bad color key {color!r}")
        confidence = float(entry["confidence"])
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence {confidence} outside [0, 1]")
        labels[color] = (str(entry["label"]), confidence)
    return Weights(model_id=str(doc["model_id"]), labels=labels)


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    return tuple(int(color[i:i + 2], 16) for i in (0, 2, 4))  # type: ignore


class ColorKeyDetector:
    def __init__(self, weights: Weights) -> None:
        self.weights = weights

    @property
    def model_id(self) -> str:
        return self.weights.model_id

    def detect(self, image: Image.Image, classes: list[str],
               conf_threshold: float) -> list[dict]:
        """Tight per-color boxes for requested classes, in a deterministic
        (label, box) order."""
        wanted = {c.lower() for c in classes}
        pixels = np.asarray(image.convert("RGB"))
        detections = []
        for color, (label, confidence) in self.weights.labels.items():
            if label.lower() not in wanted or confidence < conf_threshold:
                continue
            mask = np.all(pixels == _hex_to_rgb(color), axis=-1)
            ys, xs = np.nonzero(mask)
            if xs.size == 0:
                continue
            detections.append({
                "label": label,
                "confidence": confidence,
                "bbox": [float(xs.min()), float(ys.min()),
                         float(xs.max() + 1), float(ys.max() + 1)],
            })
        detections.sort(key=lambda d: (d["label"], d["bbox"]))
        return detections
