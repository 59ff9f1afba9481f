import json
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from svmf import toy_catalog
from svmf.detection import (
    BoundingBox,
    DetectionError,
    DetectionInstance,
    DetectionSet,
    boxes_overlap,
    dump_detections,
    expand_box,
    expansion_margin,
    filter_by_score,
    parse_detections,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)
side = st.floats(0.0, 500.0, allow_nan=False)


@st.composite
def boxes(draw):
    x, y = draw(coord), draw(coord)
    return BoundingBox(x, y, x + draw(side), y + draw(side))


def _line(instances, key="img"):
    return json.dumps({"image_key": key, "instances": instances}) + "\n"


def _inst(i, c=0, box=(0, 0, 10, 10), score=0.9):
    return {"instance_id": i, "class_id": c, "score": score, "box": list(box)}


class TestParse:
    def test_two_instances(self):
        sets = parse_detections(_line([_inst(0), _inst(1, 2)]).encode())
        assert len(sets) == 1
        assert len(sets[0].instances) == 2
        assert sets[0].instances[1].class_id == 2

    def test_empty_stream(self):
        assert parse_detections(b"") == []

    def test_order_preserved(self):
        text = _line([], "a") + _line([_inst(0)], "b") + _line([], "c")
        assert [s.image_key for s in parse_detections(text)] == ["a", "b", "c"]

    def test_score_out_of_range(self):
        with pytest.raises(DetectionError) as err:
            parse_detections(_line([_inst(0, score=1.3)]))
        assert err.value.field == "instances[0].score"
        assert err.value.line == 1

    def test_malformed_json_line_number(self):
        text = _line([_inst(0)]) + "{not json\n"
        with pytest.raises(DetectionError, match="line 2"):
            parse_detections(text)

    def test_duplicate_instance_id(self):
        with pytest.raises(DetectionError, match="instance_id"):
            parse_detections(_line([_inst(0), _inst(0)]))

    def test_inverted_box(self):
        with pytest.raises(DetectionError, match="box"):
            parse_detections(_line([_inst(0, box=(5, 0, 1, 3))]))

    def test_class_checked_against_catalog(self):
        with pytest.raises(DetectionError, match="class_id"):
            parse_detections(_line([_inst(0, c=3)]), toy_catalog("FFC"))

    def test_mask_ignored(self):
        inst = _inst(0)
        inst["mask"] = [[0, 0], [1, 1]]
        (s,) = parse_detections(_line([inst]))
        assert s.instances[0].box == BoundingBox(0, 0, 10, 10)

    def test_dump_round_trip(self):
        text = _line([_inst(0, 1, (0.5, 1.25, 3.0, 4.75), 0.5), _inst(7, 2)])
        sets = parse_detections(text)
        assert parse_detections(dump_detections(sets)) == sets


class TestMargin:
    def test_two_diagonals(self):
        # 3-4-5 triangles: diagonals 50 and 100
        s = DetectionSet("x", [
            DetectionInstance(0, 0, BoundingBox(0, 0, 30, 40)),
            DetectionInstance(1, 0, BoundingBox(0, 0, 60, 80)),
        ])
        assert expansion_margin(s, 0.1) == pytest.approx(5.0, rel=1e-15)

    def test_single_box(self):
        s = DetectionSet("x", [DetectionInstance(0, 0, BoundingBox(0, 0, 6, 8))])
        assert expansion_margin(s, 0.1) == pytest.approx(1.0, rel=1e-15)

    def test_zero_factor(self):
        s = DetectionSet("x", [DetectionInstance(0, 0, BoundingBox(0, 0, 6, 8))])
        assert expansion_margin(s, 0.0) == 0.0

    def test_empty_set(self):
        with pytest.raises(ValueError):
            expansion_margin(DetectionSet("x", []), 0.1)

    @given(st.lists(boxes(), min_size=1, max_size=6), st.floats(0.01, 100), st.floats(-1, 1))
    def test_scales_linearly(self, bs, s, factor):
        scaled = [b.transformed(scale=s) for b in bs]
        # side lengths come from differences of coordinates, so rounding error scales with |coord|
        magnitude = max(max(abs(c) for c in b.as_list()) for b in bs)
        tol = 1e-12 * s * max(1.0, magnitude) * max(1.0, abs(factor))
        assert expansion_margin(scaled, factor) == pytest.approx(s * expansion_margin(bs, factor), rel=1e-12, abs=tol)


class TestExpand:
    def test_grow(self):
        assert expand_box(BoundingBox(0, 0, 10, 10), 1) == BoundingBox(-1, -1, 11, 11)

    def test_identity(self):
        assert expand_box(BoundingBox(0, 0, 10, 10), 0) == BoundingBox(0, 0, 10, 10)

    def test_shrink_to_empty(self):
        assert expand_box(BoundingBox(0, 0, 10, 10), -6).empty

    @given(boxes(), st.floats(-50, 50))
    def test_inverse(self, b, m):
        grown = expand_box(b, m)
        assume(not grown.empty)
        back = expand_box(grown, -m)
        for got, want in zip(back.as_list(), b.as_list()):
            assert got == pytest.approx(want, abs=1e-9)


class TestOverlap:
    def test_corner_touch(self):
        assert boxes_overlap(BoundingBox(0, 0, 5, 5), BoundingBox(5, 5, 9, 9))

    def test_gap(self):
        assert not boxes_overlap(BoundingBox(0, 0, 5, 5), BoundingBox(6, 0, 9, 5))

    def test_empty_box(self):
        empty = expand_box(BoundingBox(0, 0, 10, 10), -6)
        assert not boxes_overlap(BoundingBox(0, 0, 5, 5), empty)
        assert not boxes_overlap(empty, empty)

    @given(boxes(), boxes())
    def test_symmetric(self, a, b):
        assert boxes_overlap(a, b) == boxes_overlap(b, a)

    @given(boxes())
    def test_reflexive(self, a):
        assert boxes_overlap(a, a)


def test_score_threshold():
    s = DetectionSet("x", [
        DetectionInstance(0, 0, BoundingBox(0, 0, 1, 1), 0.2),
        DetectionInstance(1, 0, BoundingBox(0, 0, 1, 1), 0.8),
    ])
    assert filter_by_score(s, 0.0) is s
    assert [i.instance_id for i in filter_by_score(s, 0.5).instances] == [1]


def test_diagonal():
    assert BoundingBox(0, 0, 3, 4).diagonal == 5.0
    assert math.isclose(BoundingBox(1, 1, 2, 2).diagonal, math.sqrt(2))
