"""Desk-scale sample fixtures: composited synthetic images with known
ground-truth boxes, labels, and attributes, plus matching cassette entries so
the whole pipeline replays offline.

Sprites are solid-color rectangles whose fill color is derived from the
instance's label and attributes, which lets the scripted visual oracle read
the ground truth straight back out of a crop.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, ImageDraw

from .attributes import ATTRIBUTE_QUESTIONS
from .backends import BackendHub, BackendRequest, Cassette
from .dataset import PromptRecord, save_dataset
from .images import ImageStore, digest_bytes
from .pipeline import RunConfig, run_benchmark

CANVAS = (512, 512)
BACKGROUND = (255, 255, 255)
MODELS = ("alpha", "bravo")

# Synonym sets served by the scripted expansion oracle. The rare objects only
# ever get detected under their generic detector label, so disabling
# expansion makes them invisible.
SYNONYM_GROUPS: dict[str, list[str]] = {
    "albatross": ["albatross", "seabird", "bird"],
    "capybara": ["capybara", "rodent"],
    "axolotl": ["axolotl", "salamander", "amphibian"],
}

# (expected, predicted) -> similarity served by the scripted judge oracle.
SIMILARITY_TABLE: dict[tuple[str, str], float] = {
    ("pink", "red"): 0.2,
    ("rubber", "smooth"): 0.3,
    ("blue", "turquoise"): 0.8,
    ("wooden", "made of wood"): 1.0,
    ("pentagonal", "round"): 0.0,
}


def sprite_color(label: str, attrs: dict[str, str]) -> tuple[int, int, int]:
    """Deterministic, non-background fill color per (label, attributes)."""
    key = json.dumps([label, sorted(attrs.items())], separators=(",", ":"))
    raw = hashlib.sha256(key.encode("utf-8")).digest()
    return tuple(b % 200 for b in raw[:3])  # type: ignore[return-value]


def _hex(color: tuple[int, int, int]) -> str:
    return "%02x%02x%02x" % color


class MockDetector:
    """In-process detector honoring the sidecar wire protocol: returns the
    composited ground-truth boxes filtered by class queries and threshold."""

    def __init__(self, ground_truth: dict[str, dict]) -> None:
        self.ground_truth = ground_truth

    def detect(self, image_bytes: bytes, classes: list[str],
               conf_threshold: float) -> dict:
        entry = self.ground_truth.get(digest_bytes(image_bytes))
        if entry is None:
            import io

            size = Image.open(io.BytesIO(image_bytes)).size
            return {"detections": [], "image_size": list(size)}
        allowed = {c.lower() for c in classes}
        detections = [d for d in entry["detections"]
                      if d["label"].lower() in allowed
                      and d["confidence"] >= conf_threshold]
        return {"detections": detections, "image_size": entry["image_size"]}


class ScriptedTextTransport:
    """Answers synonym-expansion and similarity-judge requests from fixed
    oracle tables; any other request is a hard error."""

    def __init__(self, synonyms: dict[str, list[str]] | None = None,
                 similarity: dict[tuple[str, str], float] | None = None) -> None:
        self.synonyms = synonyms if synonyms is not None else SYNONYM_GROUPS
        self.similarity = similarity if similarity is not None else SIMILARITY_TABLE

    def __call__(self, req: BackendRequest) -> str:
        text = req.prompt_text
        if "identify any synonyms or similar objects" in text:
            match = re.search(r"^Objects: (\[.*\])$", text, re.MULTILINE)
            objects = json.loads(match.group(1))
            return json.dumps({o: self.synonyms.get(o, [o]) for o in objects})
        if "whether a description matches a specific attribute" in text:
            expected = re.search(r'Expected attribute: "(.+?)"', text).group(1)
            predicted = re.search(r'Description: "(.+?)"', text).group(1)
            if expected == predicted:
                value = 1.0
            else:
                value = self.similarity.get((expected, predicted), 0.0)
            return f"{value:.2f}"
        raise AssertionError(f"scripted oracle has no answer for: {text[:80]!r}")


class ScriptedVisualTransport:
    """Reads the dominant sprite color out of the crop and answers the
    attribute question from the color legend."""

    def __init__(self, store: ImageStore, legend: dict[str, dict[str, str]]) -> None:
        self.store = store
        self.legend = legend

    def __call__(self, req: BackendRequest) -> str:
        attr_type = next(t for t, q in ATTRIBUTE_QUESTIONS.items()
                         if q == req.prompt_text)
        img = self.store.open(req.image_ref).convert("RGB")
        colors = sorted(img.getcolors(maxcolors=512 * 512), reverse=True)
        dominant = next((c for _, c in colors if c != BACKGROUND), None)
        if dominant is None:
            return "nothing"
        attrs = self.legend.get(_hex(dominant), {})
        return attrs.get(attr_type, "unknown")


# ---------------------------------------------------------------------------
# Fixture corpus definition
# ---------------------------------------------------------------------------

@dataclass
class _Inst:
    obj: str
    label: str
    attrs: dict[str, str]
    bbox: tuple[float, float, float, float] | None
    conf: float


def _insts(spec: list[dict]) -> list[_Inst]:
    out = []
    for item in spec:
        count = item.get("count", 1)
        for _ in range(count):
            out.append(_Inst(
                obj=item["obj"],
                label=item.get("label", item["obj"]),
                attrs=item.get("attrs", {}),
                bbox=item.get("bbox"),
                conf=item.get("conf", 0.9),
            ))
    return out


def _attr_record(rid: str, category: str, prompt: str, pairs: dict[str, str],
                 scenes: dict[str, list[dict]]) -> dict:
    return {
        "id": rid, "category": category, "prompt": prompt,
        "object_count": len(pairs),
        "expected": {
            "objects": list(pairs),
            "attributes": {o: [[category, v]] for o, v in pairs.items()},
        },
        "scenes": scenes,
    }


def _present(pairs: dict[str, str], attr_type: str, **overrides) -> list[dict]:
    """One instance per object; overrides replace the rendered attribute
    value (obj=None drops the object entirely)."""
    scene = []
    for obj, value in pairs.items():
        if obj in overrides and overrides[obj] is None:
            continue
        actual = overrides.get(obj, value)
        scene.append({"obj": obj, "attrs": {attr_type: actual}})
    return scene


def fixture_specs() -> list[dict]:
    color = lambda *a, **k: _attr_record(*a, **k)  # noqa: E731

    specs: list[dict] = []

    # -- color ------------------------------------------------------------
    pairs = {"car": "red"}
    specs.append(color("color-1-car", "color", "a red car", pairs, {
        "alpha": _present(pairs, "color"),
        "bravo": _present(pairs, "color", car="blue"),
    }))
    pairs = {"stop sign": "pink", "bird": "orange"}
    specs.append(color("color-2-adherent", "color",
                       "a pink stop sign and an orange bird", pairs, {
                           "alpha": _present(pairs, "color"),
                           "bravo": _present(pairs, "color", bird="green"),
                       }))
    pairs = {"peach": "yellow", "ceiling": "lime"}
    specs.append(color("color-2-partial", "color",
                       "a yellow peach and a lime ceiling", pairs, {
                           "alpha": _present(pairs, "color", ceiling=None),
                           "bravo": _present(pairs, "color"),
                       }))
    pairs = {"shirt": "brown", "apple": "pink"}
    specs.append(color("color-2-shirt-apple", "color",
                       "a brown shirt and a pink apple", pairs, {
                           "alpha": _present(pairs, "color", shirt=None,
                                             apple="red"),
                           "bravo": _present(pairs, "color"),
                       }))
    pairs = {"cube": "red", "ball": "green", "pyramid": "blue"}
    specs.append(color("color-3-shapes", "color",
                       "a red cube, a green ball and a blue pyramid", pairs, {
                           "alpha": _present(pairs, "color"),
                           "bravo": _present(pairs, "color", ball="yellow"),
                       }))
    pairs = {"apple": "red", "carrot": "orange", "lemon": "yellow",
             "pear": "green", "plate": "blue", "grape": "purple",
             "bowl": "white"}
    specs.append(color("color-7-still-life", "color",
                       "a red apple, an orange carrot, a yellow lemon, a green "
                       "pear, a blue plate, a purple grape and a white bowl",
                       pairs, {
                           "alpha": _present(pairs, "color"),
                           "bravo": _present(pairs, "color", grape=None),
                       }))
    pairs = {"book": "red", "mug": "orange", "banana": "yellow",
             "leaf": "green", "pen": "blue", "flower": "purple",
             "cup": "white", "lamp": "black", "box": "brown",
             "ribbon": "pink", "stone": "gray"}
    specs.append(color("color-11-clutter", "color",
                       "a red book, an orange mug, a yellow banana, a green "
                       "leaf, a blue pen, a purple flower, a white cup, a "
                       "black lamp, a brown box, a pink ribbon and a gray "
                       "stone", pairs, {
                           "alpha": _present(pairs, "color"),
                           "bravo": _present(pairs, "color", stone=None,
                                             ribbon="red"),
                       }))

    # -- shape ------------------------------------------------------------
    pairs = {"spoon": "pentagonal"}
    specs.append(color("shape-1-spoon", "shape", "a pentagonal spoon", pairs, {
        "alpha": _present(pairs, "shape", spoon="round"),
        "bravo": _present(pairs, "shape"),
    }))
    pairs = {"clock": "square", "mirror": "round"}
    specs.append(color("shape-2-wall", "shape",
                       "a square clock and a round mirror", pairs, {
                           "alpha": _present(pairs, "shape"),
                           "bravo": _present(pairs, "shape", clock="round"),
                       }))
    pairs = {"kite": "triangular", "window": "square", "table": "round",
             "door": "rectangular"}
    specs.append(color("shape-4-house", "shape",
                       "a triangular kite, a square window, a round table and "
                       "a rectangular door", pairs, {
                           "alpha": _present(pairs, "shape"),
                           "bravo": _present(pairs, "shape", window=None),
                       }))

    # -- texture ----------------------------------------------------------
    pairs = {"grass": "rubber"}
    specs.append(color("texture-1-grass", "texture", "a rubber grass", pairs, {
        "alpha": _present(pairs, "texture", grass="smooth"),
        "bravo": _present(pairs, "texture"),
    }))
    pairs = {"cat": "fluffy", "robot": "metallic"}
    specs.append(color("texture-2-duo", "texture",
                       "a fluffy cat and a metallic robot", pairs, {
                           "alpha": _present(pairs, "texture"),
                           "bravo": _present(pairs, "texture", robot="wooden"),
                       }))
    pairs = {"table": "wooden", "vase": "glass", "blanket": "woolen"}
    specs.append(color("texture-3-room", "texture",
                       "a wooden table, a glass vase and a woolen blanket",
                       pairs, {
                           "alpha": _present(pairs, "texture",
                                             table="made of wood"),
                           "bravo": _present(pairs, "texture", vase="rough"),
                       }))

    # -- spatial ----------------------------------------------------------
    specs.append({
        "id": "spatial-1-tree", "category": "spatial", "prompt": "a lonely tree",
        "object_count": 1,
        "expected": {"objects": ["tree"], "relations": []},
        "scenes": {
            "alpha": [{"obj": "tree", "bbox": (200, 100, 320, 400)}],
            "bravo": [{"obj": "tree", "bbox": (180, 120, 300, 420)}],
        },
    })
    specs.append({
        "id": "spatial-2-dog-table", "category": "spatial",
        "prompt": "a dog to the left of a table", "object_count": 2,
        "expected": {"objects": ["dog", "table"],
                     "relations": [["dog", "to the left of", "table"]]},
        "scenes": {
            "alpha": [{"obj": "dog", "bbox": (50, 200, 150, 300)},
                      {"obj": "table", "bbox": (300, 210, 450, 330)}],
            "bravo": [{"obj": "dog", "bbox": (300, 200, 400, 300)},
                      {"obj": "table", "bbox": (50, 210, 200, 330)}],
        },
    })
    specs.append({
        "id": "spatial-2-mouse-painting", "category": "spatial",
        "prompt": "a mouse on the bottom of a painting", "object_count": 2,
        "expected": {"objects": ["mouse", "painting"],
                     "relations": [["mouse", "on the bottom of", "painting"]]},
        "scenes": {
            "alpha": [{"obj": "mouse", "bbox": (100, 400, 140, 430)}],
            "bravo": [{"obj": "painting", "bbox": (150, 100, 350, 260)},
                      {"obj": "mouse", "bbox": (200, 220, 240, 250)}],
        },
    })
    specs.append({
        "id": "spatial-3-cat-chair", "category": "spatial",
        "prompt": "a cat on top of a chair with a lamp next to the chair",
        "object_count": 3,
        "expected": {"objects": ["cat", "chair", "lamp"],
                     "relations": [["cat", "on top of", "chair"],
                                   ["lamp", "next to", "chair"]]},
        "scenes": {
            "alpha": [{"obj": "cat", "bbox": (220, 240, 300, 305)},
                      {"obj": "chair", "bbox": (200, 300, 320, 450)},
                      {"obj": "lamp", "bbox": (340, 320, 400, 450)}],
            "bravo": [{"obj": "cat", "bbox": (220, 240, 300, 305)},
                      {"obj": "chair", "bbox": (200, 300, 320, 450)}],
        },
    })

    # -- numeracy ---------------------------------------------------------
    def num_record(rid, prompt, counts, numbers, scenes, object_count):
        return {
            "id": rid, "category": "numeracy", "prompt": prompt,
            "object_count": object_count,
            "expected": {"objects": list(counts), "counts": counts,
                         "numbers_found": numbers},
            "scenes": scenes,
        }

    specs.append(num_record(
        "numeracy-1-cat", "a single cat", {"cat": 1}, ["a", "single"], {
            "alpha": [{"obj": "cat"}],
            "bravo": [],
        }, 1))
    specs.append(num_record(
        "numeracy-2-candles", "two candles", {"candle": 2}, ["two"], {
            "alpha": [{"obj": "candle", "bbox": (20, 20, 80, 80)},
                      {"obj": "candle", "bbox": (120, 20, 180, 80)},
                      # near-exact duplicate box, suppressed by dedup
                      {"obj": "candle", "bbox": (22, 21, 80, 80), "conf": 0.8}],
            "bravo": [{"obj": "candle", "count": 3}],
        }, 2))
    specs.append(num_record(
        "numeracy-4-trucks", "four trucks", {"truck": 4}, ["four"], {
            "alpha": [{"obj": "truck", "count": 2}],
            "bravo": [{"obj": "truck", "count": 4}],
        }, 4))
    specs.append(num_record(
        "numeracy-5-suitcases", "three suitcases and two people",
        {"suitcase": 3, "person": 2}, ["three", "two"], {
            "alpha": [{"obj": "suitcase", "count": 5}, {"obj": "person"}],
            "bravo": [{"obj": "suitcase", "count": 3},
                      {"obj": "person", "count": 2}],
        }, 5))
    specs.append(num_record(
        "numeracy-7-ducks", "seven ducks", {"duck": 7}, ["seven"], {
            "alpha": [{"obj": "duck", "count": 7}],
            "bravo": [{"obj": "duck", "count": 5}],
        }, 7))
    specs.append(num_record(
        "numeracy-12-eggs", "a dozen eggs", {"egg": 12}, ["dozen"], {
            "alpha": [{"obj": "egg", "count": 10}],
            "bravo": [{"obj": "egg", "count": 12}],
        }, 12))
    specs.append(num_record(
        "numeracy-rare-albatross", "two albatrosses", {"albatross": 2},
        ["two"], {
            "alpha": [{"obj": "albatross", "label": "bird", "count": 2}],
            "bravo": [{"obj": "albatross", "label": "bird", "count": 2}],
        }, 2))
    specs.append(num_record(
        "numeracy-rare-capybara", "three capybaras", {"capybara": 3},
        ["three"], {
            "alpha": [{"obj": "capybara", "label": "rodent", "count": 3}],
            "bravo": [{"obj": "capybara", "label": "rodent", "count": 2}],
        }, 3))
    specs.append(num_record(
        "numeracy-rare-axolotl", "an axolotl", {"axolotl": 1}, ["an"], {
            "alpha": [{"obj": "axolotl", "label": "salamander"}],
            "bravo": [{"obj": "axolotl", "label": "salamander"}],
        }, 1))

    return specs


RARE_OBJECT_RECORD_IDS = ("numeracy-rare-albatross", "numeracy-rare-capybara",
                          "numeracy-rare-axolotl")


# ---------------------------------------------------------------------------
# Rendering and generation
# ---------------------------------------------------------------------------

def _grid_box(slot: int, rng: random.Random) -> tuple[float, float, float, float]:
    col, row = slot % 5, slot // 5
    x = 6 + col * 100 + 10 + rng.randint(-8, 8)
    y = 6 + row * 100 + 10 + rng.randint(-8, 8)
    return (x, y, x + 60, y + 60)


def _render_scene(instances: list[_Inst], rng: random.Random,
                  legend: dict[str, dict[str, str]]) -> tuple[Image.Image, list[dict]]:
    img = Image.new("RGB", CANVAS, BACKGROUND)
    draw = ImageDraw.Draw(img)
    detections = []
    slot = 0
    for inst in instances:
        bbox = inst.bbox
        if bbox is None:
            bbox = _grid_box(slot, rng)
            slot += 1
        color = sprite_color(inst.label, inst.attrs)
        key = _hex(color)
        if key in legend and legend[key] != inst.attrs:
            raise AssertionError(f"sprite color collision on {key}")
        legend[key] = dict(inst.attrs)
        draw.rectangle([bbox[0], bbox[1], bbox[2] - 1, bbox[3] - 1], fill=color)
        detections.append({"label": inst.label, "confidence": inst.conf,
                           "bbox": list(bbox)})
    return img, detections


def generate_sample_fixture(seed: int, out_dir: str | Path) -> dict:
    """Emit manifest, composited images, detector ground truth, and a
    cassette recorded for both synonym-expansion modes. Deterministic: the
    same seed yields byte-identical output."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    specs = fixture_specs()
    records = [PromptRecord.from_dict(
        {k: spec[k] for k in ("id", "category", "prompt", "object_count",
                              "expected")} | {"split": "simple"})
        for spec in specs]

    legend: dict[str, dict[str, str]] = {}
    ground_truth: dict[str, dict] = {}
    for spec in specs:
        for model in MODELS:
            instances = _insts(spec["scenes"][model])
            img, detections = _render_scene(instances, rng, legend)
            path = out / "images" / model / f"{spec['id']}.png"
            path.parent.mkdir(parents=True, exist_ok=True)
            img.save(path, format="PNG")
            ground_truth[digest_bytes(path.read_bytes())] = {
                "image_size": list(CANVAS),
                "detections": detections,
            }

    save_dataset(records, out / "manifest.jsonl")
    oracle_doc = {
        "detections": ground_truth,
        "legend": legend,
        "synonyms": SYNONYM_GROUPS,
        "similarity": {f"{e}|{p}": v for (e, p), v in SIMILARITY_TABLE.items()},
    }
    (out / "ground_truth.json").write_text(
        json.dumps(oracle_doc, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")

    # Record the cassette by running the full pipeline against the scripted
    # oracles, once per synonym-expansion mode.
    store = ImageStore()
    cassette = Cassette(mode="record", path=out / "cassette.json")
    hub = BackendHub(
        store,
        text_transport=ScriptedTextTransport(),
        visual_transport=ScriptedVisualTransport(store, legend),
        detector=MockDetector(ground_truth),
        cassette=cassette,
    )
    cfg = RunConfig()
    run_benchmark(records, list(MODELS), out / "images", hub, cfg)
    run_benchmark(records, list(MODELS), out / "images", hub,
                  cfg.without_synonyms())
    for entry in cassette.entries.values():
        entry["latency_ms"] = 0.0  # wall-clock noise would break determinism
    cassette.save()
    return {
        "manifest": out / "manifest.jsonl",
        "images": out / "images",
        "cassette": out / "cassette.json",
        "ground_truth": out / "ground_truth.json",
    }


def load_oracles(fixture_dir: str | Path) -> dict:
    doc = json.loads((Path(fixture_dir) / "ground_truth.json")
                     .read_text(encoding="utf-8"))
    doc["similarity"] = {tuple(k.split("|", 1)): v
                         for k, v in doc["similarity"].items()}
    return doc


def fixture_hub(fixture_dir: str | Path, mode: str = "replay",
                store: ImageStore | None = None) -> BackendHub:
    """Hub wired for a generated fixture directory: replay serves everything
    from the cassette; record rebuilds the scripted oracles."""
    store = store or ImageStore()
    cassette = Cassette(mode=mode, path=Path(fixture_dir) / "cassette.json")
    if mode == "replay":
        return BackendHub(store, cassette=cassette)
    oracles = load_oracles(fixture_dir)
    return BackendHub(
        store,
        text_transport=ScriptedTextTransport(oracles["synonyms"],
                                             oracles["similarity"]),
        visual_transport=ScriptedVisualTransport(store, oracles["legend"]),
        detector=MockDetector(oracles["detections"]),
        cassette=cassette,
    )
