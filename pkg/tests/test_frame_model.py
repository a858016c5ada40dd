import pytest

from swig_toolkit import BoundingBox, GroundedFrame, NounVocabulary, validate_frame
from swig_toolkit.frame_model import FrameModelError, Violation


class TestBoundingBox:
    def test_valid(self):
        b = BoundingBox(1, 2, 4, 8)
        assert b.width == 3 and b.height == 6 and b.area == 18

    @pytest.mark.parametrize("coords", [
        (5, 0, 5, 10),   # zero width
        (0, 10, 10, 5),  # inverted y
        (-1, 0, 5, 5),   # negative
        (0, 0, float("nan"), 5),
        (0, 0, float("inf"), 5),
    ])
    def test_invalid(self, coords):
        with pytest.raises(FrameModelError):
            BoundingBox(*coords)

    def test_clamped(self):
        b = BoundingBox(10, 10, 150, 90)
        assert b.clamped(100, 100) == BoundingBox(10, 10, 100, 90)


class TestNounVocabulary:
    def test_null_not_a_member(self):
        with pytest.raises(FrameModelError):
            NounVocabulary(frozenset({"man", ""}))


class TestValidateFrame:
    def test_valid_kneading_frame(self, lexicon):
        frame = GroundedFrame(
            "kneading",
            (("Agent", "man"), ("Item", "dough"), ("Place", "kitchen")),
            (BoundingBox(0, 0, 10, 10), BoundingBox(5, 5, 8, 8), None),
        )
        assert validate_frame(frame, lexicon) == []

    def test_place_grounded(self, lexicon):
        frame = GroundedFrame(
            "kneading",
            (("Agent", "man"), ("Item", "dough"), ("Place", "kitchen")),
            (None, None, BoundingBox(0, 0, 10, 10)),
        )
        report = validate_frame(frame, lexicon)
        assert [v.rule for v in report] == ["place-grounded"]
        assert report[0].role_index == 2

    def test_null_noun_grounded(self, lexicon):
        frame = GroundedFrame(
            "kneading",
            (("Agent", "man"), ("Item", ""), ("Place", "kitchen")),
            (None, BoundingBox(0, 0, 10, 10), None),
        )
        assert [v.rule for v in validate_frame(frame, lexicon)] == ["null-noun-grounded"]

    def test_unknown_verb(self, lexicon):
        frame = GroundedFrame("flying", (("Agent", "man"),), (None,))
        assert validate_frame(frame, lexicon) == [Violation("unknown-verb", -1, "flying")]

    def test_role_order_is_authoritative(self, lexicon):
        frame = GroundedFrame(
            "kneading",
            (("Item", "dough"), ("Agent", "man"), ("Place", "kitchen")),
            (None, None, None),
        )
        assert [v.rule for v in validate_frame(frame, lexicon)] == ["role-mismatch"]

    def test_idempotent(self, lexicon):
        frame = GroundedFrame(
            "jumping", (("Agent", "man"), ("Place", "")), (None, None)
        )
        assert validate_frame(frame, lexicon) == validate_frame(frame, lexicon)

    def test_parallel_lists_enforced(self):
        with pytest.raises(FrameModelError):
            GroundedFrame("jumping", (("Agent", "man"),), (None, None))
