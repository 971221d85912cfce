import json

import pytest
from PIL import Image

from saneval.backends import BackendHub
from saneval.detection import (SynonymExpander, SynonymExpansion, crop,
                               dedup_instances, dedup_mapping, map_detections,
                               select_instance)
from saneval.errors import BadBBox
from saneval.geometry import BBox, Detection
from saneval.images import ImageStore


def _det(label, conf=0.9, box=(0, 0, 10, 10)):
    return Detection(label, conf, BBox(*box))


def test_expansion_must_start_with_object():
    with pytest.raises(ValueError):
        SynonymExpansion({"cat": ["feline", "cat"]})
    SynonymExpansion({"cat": ["cat", "feline"]})


def test_all_terms_sorted_union():
    exp = SynonymExpansion({"cat": ["cat", "feline"],
                            "dog": ["dog", "canine", "feline"]})
    assert exp.all_terms() == ["canine", "cat", "dog", "feline"]


def test_disabled_expander_is_identity_with_no_backend_call():
    calls = []

    def transport(req):
        calls.append(req)
        return "{}"

    hub = BackendHub(ImageStore(), text_transport=transport)
    expander = SynonymExpander(hub, "judge", enabled=False)
    exp = expander.expand(["albatross", "cat"])
    assert exp.terms == {"albatross": ["albatross"], "cat": ["cat"]}
    assert calls == []


def test_enabled_expander_groups_synonyms():
    def transport(req):
        assert '["albatross", "cat"]' in req.prompt_text
        return json.dumps({"albatross": ["albatross", "seabird", "bird"],
                           "cat": ["cat"]})

    hub = BackendHub(ImageStore(), text_transport=transport)
    exp = SynonymExpander(hub, "judge").expand(["albatross", "cat"])
    assert exp.terms["albatross"] == ["albatross", "seabird", "bird"]
    assert exp.terms["cat"] == ["cat"]


def test_expander_handles_membership_grouping():
    # object appears inside another representative's group
    def transport(req):
        return json.dumps({"bird": ["albatross", "gull"]})

    hub = BackendHub(ImageStore(), text_transport=transport)
    exp = SynonymExpander(hub, "judge").expand(["albatross"])
    assert exp.terms["albatross"] == ["albatross", "bird", "gull"]


def test_map_detections_earliest_term_wins():
    exp = SynonymExpansion({"albatross": ["albatross", "bird"],
                            "sparrow": ["sparrow", "bird"]})
    mapping = map_detections([_det("bird")], exp)
    # both claim "bird" at position 1; lexicographic object name breaks the tie
    assert len(mapping.matched["albatross"]) == 1
    assert mapping.matched["sparrow"] == []


def test_map_detections_prefers_closer_term():
    exp = SynonymExpansion({"bird": ["bird"],
                            "albatross": ["albatross", "bird"]})
    mapping = map_detections([_det("bird")], exp)
    assert len(mapping.matched["bird"]) == 1
    assert mapping.matched["albatross"] == []


def test_map_detections_singular_fallback():
    exp = SynonymExpansion({"truck": ["truck"]})
    mapping = map_detections([_det("trucks")], exp)
    assert len(mapping.matched["truck"]) == 1
    # short words are not stripped ("bus" stays "bus")
    exp2 = SynonymExpansion({"bu": ["bu"]})
    mapping2 = map_detections([_det("bus")], exp2)
    assert mapping2.unmatched and not mapping2.matched["bu"]


def test_map_detections_unmatched_bucket():
    exp = SynonymExpansion({"cat": ["cat"]})
    mapping = map_detections([_det("zebra"), _det("cat")], exp)
    assert len(mapping.matched["cat"]) == 1
    assert [d.label for d in mapping.unmatched] == ["zebra"]


def test_select_instance_ordering():
    dets = [
        _det("cat", conf=0.8, box=(0, 0, 10, 10)),
        _det("cat", conf=0.9, box=(0, 0, 5, 5)),
        _det("cat", conf=0.9, box=(20, 20, 40, 40)),
    ]
    exp = SynonymExpansion({"cat": ["cat"]})
    best = select_instance(map_detections(dets, exp), "cat")
    # highest confidence first, then larger area
    assert best.bbox == BBox(20, 20, 40, 40)
    assert select_instance(map_detections([], exp), "cat") is None


def test_select_instance_top_left_tiebreak():
    dets = [_det("cat", box=(50, 50, 60, 60)), _det("cat", box=(10, 10, 20, 20))]
    exp = SynonymExpansion({"cat": ["cat"]})
    best = select_instance(map_detections(dets, exp), "cat")
    assert best.bbox == BBox(10, 10, 20, 20)


def test_dedup_suppresses_near_duplicates():
    keep = _det("cat", conf=0.9, box=(0, 0, 100, 100))
    dup = _det("cat", conf=0.7, box=(1, 1, 100, 100))
    distinct = _det("cat", conf=0.8, box=(200, 200, 300, 300))
    out = dedup_instances([dup, keep, distinct])
    assert keep in out and distinct in out and dup not in out


def test_dedup_keeps_moderate_overlap():
    a = _det("cat", conf=0.9, box=(0, 0, 100, 100))
    b = _det("cat", conf=0.8, box=(50, 0, 150, 100))  # IoU = 1/3
    assert len(dedup_instances([a, b])) == 2


def test_dedup_mapping_leaves_unmatched_alone():
    exp = SynonymExpansion({"cat": ["cat"]})
    mapping = map_detections([_det("cat", conf=0.9), _det("cat", conf=0.5),
                              _det("zebra")], exp)
    deduped = dedup_mapping(mapping)
    assert len(deduped.matched["cat"]) == 1
    assert len(deduped.unmatched) == 1


def test_crop_is_content_addressed():
    store = ImageStore()
    img = Image.new("RGB", (100, 100), (255, 255, 255))
    img.paste((200, 0, 0), (10, 10, 50, 50))
    ref = store.put_image(img)
    crop_ref = crop(store, ref, BBox(10, 10, 50, 50))
    assert crop(store, ref, BBox(10, 10, 50, 50)) == crop_ref
    assert store.open(crop_ref).size == (40, 40)
    with pytest.raises(BadBBox):
        crop(store, ref, BBox(90, 90, 120, 120))
