"""Benchmark records: JSONL manifest loading/validation and cardinality
bucketing.

Manifest field names are fixed: id, split, category, prompt, expected,
object_count. Generated images live at {model_name}/{record_id}.png under the
image root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ManifestError, SanevalError
from .parsing import ParsedPrompt, validate_parsed

SPLITS = ("simple", "hard")
CATEGORIES = ("color", "shape", "texture", "spatial", "numeracy")
BUCKETS = ("1", "2", "3-5", "6-10", ">10")


@dataclass
class PromptRecord:
    id: str
    split: str
    category: str
    prompt: str
    object_count: int
    expected: Optional[ParsedPrompt] = None

    def validate(self) -> "PromptRecord":
        if not self.id:
            raise ManifestError("record id must be nonempty")
        if self.split not in SPLITS:
            raise ManifestError(f"record {self.id}: unknown split {self.split!r}")
        if self.category not in CATEGORIES:
            raise ManifestError(
                f"record {self.id}: unknown category {self.category!r}")
        if not self.prompt:
            raise ManifestError(f"record {self.id}: empty prompt")
        if self.object_count < 1:
            raise ManifestError(f"record {self.id}: object_count must be >= 1")
        if self.expected is not None:
            try:
                self.expected = validate_parsed(self.expected)
            except SanevalError as exc:
                raise ManifestError(
                    f"record {self.id}: invalid expected annotation: {exc}") from exc
        return self

    def to_dict(self) -> dict:
        doc = {
            "id": self.id,
            "split": self.split,
            "category": self.category,
            "prompt": self.prompt,
            "object_count": self.object_count,
        }
        if self.expected is not None:
            doc["expected"] = self.expected.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PromptRecord":
        try:
            expected = doc.get("expected")
            return cls(
                id=str(doc["id"]),
                split=str(doc["split"]),
                category=str(doc["category"]),
                prompt=str(doc["prompt"]),
                object_count=int(doc["object_count"]),
                expected=ParsedPrompt.from_dict(expected) if expected else None,
            ).validate()
        except KeyError as exc:
            raise ManifestError(
                f"record {doc.get('id', '?')}: missing field {exc}") from exc


def bucket_of(object_count: int) -> str:
    """Cardinality stratum for complexity-sensitive aggregation."""
    if object_count < 1:
        raise ManifestError(f"invalid object count {object_count}")
    if object_count == 1:
        return "1"
    if object_count == 2:
        return "2"
    if object_count <= 5:
        return "3-5"
    if object_count <= 10:
        return "6-10"
    return ">10"


def load_dataset(manifest_path: str | Path) -> list[PromptRecord]:
    records: list[PromptRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(
            Path(manifest_path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except ValueError as exc:
            raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from exc
        record = PromptRecord.from_dict(doc)
        if record.id in seen:
            raise ManifestError(f"duplicate record id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    return records


def save_dataset(records: list[PromptRecord], manifest_path: str | Path) -> None:
    lines = [json.dumps(r.to_dict(), sort_keys=True, separators=(", ", ": "))
             for r in records]
    Path(manifest_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def image_path(image_root: str | Path, model_name: str, record_id: str) -> Path:
    return Path(image_root) / model_name / f"{record_id}.png"
