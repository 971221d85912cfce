"""Prompt understanding: turn a natural-language prompt into a structured
expectation (objects, attributes, spatial triplets, counts) by driving the
text backend with the four extraction prompts and strictly validating the
structured replies.

Malformed replies get exactly one re-ask with a terse reminder appended;
a second failure raises ParseFailure. Replies are never repaired by guessing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from . import assets
from .backends import BackendHub, BackendRequest
from .errors import InconsistentParse, ParseFailure, UnsupportedRelation

ATTRIBUTE_TYPES = ("color", "shape", "texture")

# Word-to-integer conversion rules, exactly the documented set.
NUMBER_WORDS: dict[str, int] = {
    "one": 1, "a": 1, "an": 1, "single": 1,
    "two": 2, "couple": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
    "ten": 10,
    "dozen": 12,
    "hundred": 100,
}


@dataclass
class ParsedPrompt:
    """Structured ground-truth expectation for one prompt."""

    objects: list[str] = field(default_factory=list)
    # object -> [(attr_type, value)]
    attributes: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    # (obj1, relation, obj2)
    relations: list[tuple[str, str, str]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    numbers_found: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "objects": list(self.objects),
            "attributes": {o: [list(p) for p in pairs]
                           for o, pairs in self.attributes.items()},
            "relations": [list(r) for r in self.relations],
            "counts": dict(self.counts),
            "numbers_found": list(self.numbers_found),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParsedPrompt":
        return cls(
            objects=[str(o) for o in d.get("objects", [])],
            attributes={str(o): [(str(t), str(v)) for t, v in pairs]
                        for o, pairs in d.get("attributes", {}).items()},
            relations=[(str(a), str(r), str(b))
                       for a, r, b in d.get("relations", [])],
            counts={str(o): int(n) for o, n in d.get("counts", {}).items()},
            numbers_found=[str(t) for t in d.get("numbers_found", [])],
        )


def _normalize_name(name: str) -> str:
    return name.strip().lower()


def validate_parsed(parsed: ParsedPrompt) -> ParsedPrompt:
    """Enforce closure and consistency invariants; idempotent.

    Objects referenced by attributes, relations, or counts are added to the
    object list. Count values are cross-checked against the number-word table
    via numbers_found.
    """
    objects = [_normalize_name(o) for o in parsed.objects]
    seen = set(objects)

    attributes = {}
    for obj, pairs in parsed.attributes.items():
        obj = _normalize_name(obj)
        for attr_type, _ in pairs:
            if attr_type not in ATTRIBUTE_TYPES:
                raise InconsistentParse(f"unknown attribute type {attr_type!r}")
        attributes[obj] = [(t, v.strip().lower()) for t, v in pairs]
        if obj not in seen:
            objects.append(obj)
            seen.add(obj)

    relations = []
    for o1, rel, o2 in parsed.relations:
        o1, o2 = _normalize_name(o1), _normalize_name(o2)
        relations.append((o1, rel.strip().lower(), o2))
        for obj in (o1, o2):
            if obj not in seen:
                objects.append(obj)
                seen.add(obj)

    counts: dict[str, int] = {}
    for obj, n in parsed.counts.items():
        obj = _normalize_name(obj)
        n = int(n)
        if n < 1:
            raise InconsistentParse(f"count for {obj!r} must be >= 1, got {n}")
        if obj in counts and counts[obj] != n:
            raise InconsistentParse(
                f"contradictory counts for {obj!r}: {counts[obj]} vs {n}")
        counts[obj] = n
        if obj not in seen:
            objects.append(obj)
            seen.add(obj)

    numbers_found = [t.strip() for t in parsed.numbers_found]
    if counts:
        known = set(counts.values())
        for token in numbers_found:
            lowered = token.lower()
            if lowered in NUMBER_WORDS:
                value = NUMBER_WORDS[lowered]
            elif lowered.isdigit():
                value = int(lowered)
            else:
                continue
            if value not in known:
                raise InconsistentParse(
                    f"number token {token!r} ({value}) matches no extracted count")

    # Keep per-object maps in object-list order so feedback follows the
    # prompt, not whatever order a JSON round-trip imposed.
    attributes = {o: attributes[o] for o in objects if o in attributes}
    counts = {o: counts[o] for o in objects if o in counts}
    return ParsedPrompt(objects=objects, attributes=attributes,
                        relations=relations, counts=counts,
                        numbers_found=numbers_found)


def merge_counts(*count_maps: dict[str, int]) -> dict[str, int]:
    merged: dict[str, int] = {}
    for counts in count_maps:
        for obj, n in counts.items():
            if obj in merged and merged[obj] != n:
                raise InconsistentParse(
                    f"contradictory counts for {obj!r}: {merged[obj]} vs {n}")
            merged[obj] = n
    return merged


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = re.sub(r"^```[a-zA-Z]*\n?", "", text)
        text = re.sub(r"\n?```$", "", text)
    return text.strip()


class PromptParser:
    """Drives the text backend with the four extraction prompts."""

    def __init__(self, hub: BackendHub, model_id: str,
                 available_relations: tuple[str, ...]) -> None:
        self.hub = hub
        self.model_id = model_id
        self.available_relations = available_relations

    def _ask_json(self, prompt_text: str, check):
        """Send, parse, validate; one re-ask on malformed structure."""
        reply = self.hub.complete_text(
            BackendRequest.text(self.model_id, prompt_text)).text
        try:
            return check(json.loads(_strip_fences(reply)))
        except (ValueError, TypeError, KeyError):
            pass
        reply = self.hub.complete_text(
            BackendRequest.text(self.model_id,
                                prompt_text + assets.REASK_SUFFIX)).text
        try:
            return check(json.loads(_strip_fences(reply)))
        except (ValueError, TypeError, KeyError) as exc:
            raise ParseFailure(f"backend reply not parseable: {exc}") from exc

    def extract_objects(self, prompt: str) -> list[str]:
        if not prompt.strip():
            raise ParseFailure("empty prompt")
        rendered = assets.render("objects_prompt.txt", prompt=prompt)

        def check(doc):
            if not isinstance(doc, list) or not all(isinstance(o, str) for o in doc):
                raise TypeError("expected a JSON array of strings")
            return doc

        raw = self._ask_json(rendered, check)
        out: list[str] = []
        for name in (_normalize_name(o) for o in raw):
            if name and name not in out:
                out.append(name)
        return out

    def extract_attributes(self, prompt: str) -> dict[str, list[str]]:
        if not prompt.strip():
            raise ParseFailure("empty prompt")
        rendered = assets.render("attributes_prompt.txt", prompt=prompt)

        def check(doc):
            if not isinstance(doc, dict):
                raise TypeError("expected a JSON object")
            for k, v in doc.items():
                if not isinstance(k, str) or not isinstance(v, list) \
                        or not all(isinstance(a, str) for a in v):
                    raise TypeError("expected object-name -> attribute-list")
            return doc

        raw = self._ask_json(rendered, check)
        return {_normalize_name(k): [a.strip().lower() for a in v]
                for k, v in raw.items() if v}

    def extract_spatial(self, prompt: str) -> Optional[tuple[str, str, str]]:
        if not prompt.strip():
            raise ParseFailure("empty prompt")
        rendered = assets.render(
            "spatial_prompt.txt", prompt=prompt,
            available_relationships=", ".join(self.available_relations))

        def check(doc):
            if not isinstance(doc, dict):
                raise TypeError("expected a JSON object")
            if not doc:
                return None
            if set(doc) != {"obj1", "relationship", "obj2"}:
                raise TypeError("expected keys obj1/relationship/obj2")
            return (_normalize_name(doc["obj1"]),
                    doc["relationship"].strip().lower(),
                    _normalize_name(doc["obj2"]))

        triple = self._ask_json(rendered, check)
        if triple is None:
            return None
        if triple[1] not in self.available_relations:
            # one structured re-ask, then refuse
            triple = self._ask_json(rendered + assets.REASK_SUFFIX, check)
            if triple is None:
                return None
            if triple[1] not in self.available_relations:
                raise UnsupportedRelation(
                    f"relation {triple[1]!r} outside the configured set")
        return triple

    def extract_numeracy(self, prompt: str) -> tuple[dict[str, int], list[str]]:
        if not prompt.strip():
            raise ParseFailure("empty prompt")
        rendered = assets.render(
            "numeracy_prompt.txt", prompt=prompt,
            available_numbers=", ".join(NUMBER_WORDS))

        def check(doc):
            if not isinstance(doc, dict):
                raise TypeError("expected a JSON object")
            if "objects" not in doc or "numbers_found" not in doc:
                raise KeyError("reply lacks objects/numbers_found keys")
            objects = doc["objects"]
            numbers = doc["numbers_found"]
            if not isinstance(objects, dict) or not isinstance(numbers, list):
                raise TypeError("objects must be a map and numbers_found a list")
            counts = {_normalize_name(k): int(v) for k, v in objects.items()}
            return counts, [str(t) for t in numbers]

        return self._ask_json(rendered, check)

    def parse(self, prompt: str, attr_type: Optional[str] = None) -> ParsedPrompt:
        """Run all four extractors and validate the merged result.

        attr_type tags extracted attribute values for attribute-category
        records; when None, extracted attributes are dropped (they are not
        scored for spatial/numeracy records).
        """
        objects = self.extract_objects(prompt)
        attributes: dict[str, list[tuple[str, str]]] = {}
        if attr_type is not None:
            if attr_type not in ATTRIBUTE_TYPES:
                raise InconsistentParse(f"unknown attribute type {attr_type!r}")
            raw = self.extract_attributes(prompt)
            attributes = {o: [(attr_type, v) for v in vals]
                          for o, vals in raw.items()}
        relation = self.extract_spatial(prompt)
        counts, numbers_found = self.extract_numeracy(prompt)
        return validate_parsed(ParsedPrompt(
            objects=objects,
            attributes=attributes,
            relations=[relation] if relation else [],
            counts=counts,
            numbers_found=numbers_found,
        ))
