"""Enhanced object detection: synonym expansion, single-pass detection over
the expanded query union, and deterministic alignment of detector labels back
to expected objects."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Optional

from . import assets
from .backends import BackendHub, BackendRequest, DEFAULT_CONF_THRESHOLD
from .errors import BadBBox, ParseFailure
from .geometry import BBox, Detection
from .images import ImageStore
from .parsing import _strip_fences

DEDUP_IOU_THRESHOLD = 0.9


@dataclass
class SynonymExpansion:
    """Map expected object -> ordered query terms; first term is the object."""

    terms: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for obj, term_list in self.terms.items():
            if not term_list or term_list[0] != obj:
                raise ValueError(f"term list for {obj!r} must start with itself")

    def all_terms(self) -> list[str]:
        seen: set[str] = set()
        out: list[str] = []
        for term_list in self.terms.values():
            for term in term_list:
                if term not in seen:
                    seen.add(term)
                    out.append(term)
        return sorted(out)

    @classmethod
    def identity(cls, objects: list[str]) -> "SynonymExpansion":
        return cls({obj: [obj] for obj in objects})


@dataclass
class ObjectMapping:
    """Detections aligned to expected objects; leftovers stay unmatched."""

    matched: dict[str, list[Detection]] = field(default_factory=dict)
    unmatched: list[Detection] = field(default_factory=list)


class SynonymExpander:
    """Expands expected objects into synonym sets via the text backend.

    With the ablation switch disabled, returns the identity expansion and
    performs no backend call.
    """

    def __init__(self, hub: BackendHub, model_id: str, enabled: bool = True) -> None:
        self.hub = hub
        self.model_id = model_id
        self.enabled = enabled

    def expand(self, objects: list[str]) -> SynonymExpansion:
        if not objects:
            raise ValueError("objects must be nonempty")
        if not self.enabled:
            return SynonymExpansion.identity(objects)
        rendered = assets.render("synonyms_prompt.txt",
                                 object_names=json.dumps(objects))
        groups = self._ask(rendered)
        terms: dict[str, list[str]] = {}
        for obj in objects:
            group = self._group_for(obj, groups)
            ordered = [obj] + [t for t in group if t != obj]
            # dedup, preserve order, lowercase
            seen: set[str] = set()
            terms[obj] = [t for t in (x.strip().lower() for x in ordered)
                          if t and not (t in seen or seen.add(t))]
        return SynonymExpansion(terms)

    def _group_for(self, obj: str, groups: dict[str, list[str]]) -> list[str]:
        if obj in groups:
            return groups[obj]
        for rep, members in groups.items():
            if obj in members:
                return [rep] + members
        return [obj]

    def _ask(self, rendered: str) -> dict[str, list[str]]:
        for attempt, prompt_text in enumerate(
                (rendered, rendered + assets.REASK_SUFFIX)):
            reply = self.hub.complete_text(
                BackendRequest.text(self.model_id, prompt_text)).text
            try:
                doc = json.loads(_strip_fences(reply))
                if not isinstance(doc, dict):
                    raise TypeError
                return {str(k).lower(): [str(v).lower() for v in vs]
                        for k, vs in doc.items()}
            except (ValueError, TypeError):
                if attempt == 1:
                    raise ParseFailure("synonym reply is not a JSON object of lists")
        raise AssertionError("unreachable")


def run_detection(hub: BackendHub, image_ref: str, expansion: SynonymExpansion,
                  conf_threshold: float = DEFAULT_CONF_THRESHOLD) -> list[Detection]:
    """Single detector pass over the deduplicated union of all query terms."""
    if not expansion.terms:
        raise ValueError("expansion must be nonempty")
    return hub.detect(image_ref, expansion.all_terms(), conf_threshold)


def _singular(label: str) -> str:
    label = label.strip().lower()
    return label[:-1] if label.endswith("s") and len(label) > 3 else label


def map_detections(detections: list[Detection],
                   expansion: SynonymExpansion) -> ObjectMapping:
    """Assign each detection to the expected object whose synonym list
    contains its label. When several objects claim a label, the object whose
    term list places the label earliest wins, tie-broken by lexicographic
    object name. Total: every detection lands in exactly one bucket."""
    mapping = ObjectMapping(matched={obj: [] for obj in expansion.terms})
    for det in detections:
        label = det.label.strip().lower()
        best: Optional[tuple[int, str]] = None
        for obj, terms in expansion.terms.items():
            pos = _term_position(label, terms)
            if pos is None:
                continue
            key = (pos, obj)
            if best is None or key < best:
                best = key
        if best is None:
            mapping.unmatched.append(det)
        else:
            mapping.matched[best[1]].append(det)
    return mapping


def _term_position(label: str, terms: list[str]) -> Optional[int]:
    if label in terms:
        return terms.index(label)
    singular = _singular(label)
    for i, term in enumerate(terms):
        if singular == term or singular == _singular(term):
            return i
    return None


def select_instance(mapping: ObjectMapping, obj: str) -> Optional[Detection]:
    """Best matched instance: highest confidence, then larger box area, then
    top-left-most box."""
    candidates = mapping.matched.get(obj, [])
    if not candidates:
        return None
    return min(candidates,
               key=lambda d: (-d.confidence, -d.bbox.area, d.bbox.y1, d.bbox.x1))


def dedup_instances(detections: list[Detection],
                    iou_threshold: float = DEDUP_IOU_THRESHOLD) -> list[Detection]:
    """Greedy suppression of near-exact duplicates (IoU > threshold); the
    higher-confidence box survives, so the top instance is never removed."""
    ordered = sorted(detections,
                     key=lambda d: (-d.confidence, -d.bbox.area, d.bbox.y1, d.bbox.x1))
    kept: list[Detection] = []
    for det in ordered:
        if all(det.bbox.iou(k.bbox) <= iou_threshold for k in kept):
            kept.append(det)
    return kept


def dedup_mapping(mapping: ObjectMapping,
                  iou_threshold: float = DEDUP_IOU_THRESHOLD) -> ObjectMapping:
    return ObjectMapping(
        matched={obj: dedup_instances(dets, iou_threshold)
                 for obj, dets in mapping.matched.items()},
        unmatched=list(mapping.unmatched),
    )


def crop(store: ImageStore, image_ref: str, bbox: BBox) -> str:
    """Crop the box region into a new content-addressed image."""
    img = store.open(image_ref)
    if not bbox.within(*img.size):
        raise BadBBox(f"box {bbox} outside image {img.size}")
    region = img.crop((int(bbox.x1), int(bbox.y1), int(bbox.x2), int(bbox.y2)))
    return store.put_image(region)
