import random

import numpy as np
import pytest

from swig_toolkit import BoundingBox, DetectionSet, GroundedFrame, assign_groundings
from swig_toolkit.fusion import FusionError
from conftest import make_box

NOUN_INDEX = {"man": 0, "dough": 1, "sofa": 2}


def detection_set(scores, n_boxes=None):
    scores = np.asarray(scores, dtype=float)
    n_boxes = n_boxes or scores.shape[0]
    boxes = tuple(BoundingBox(i * 10, 0, i * 10 + 5, 5) for i in range(n_boxes))
    return DetectionSet(boxes, scores, NOUN_INDEX)


def kneading_frame(agent="man", item="dough", place="kitchen"):
    return GroundedFrame(
        "kneading",
        (("Agent", agent), ("Item", item), ("Place", place)),
        (None, None, None),
    )


class TestAssignGroundings:
    def test_single_box_above_threshold(self):
        det = detection_set([[0.0, 3.0, 0.0]])
        fused = assign_groundings(kneading_frame(), det)
        assert fused.grounding_of("Item") == det.boxes[0]

    def test_all_scores_below_threshold(self):
        det = detection_set([[-10.0, -10.0, -10.0]])
        fused = assign_groundings(kneading_frame(), det)
        assert fused.grounding_of("Agent") is None
        assert fused.grounding_of("Item") is None

    def test_place_always_ungrounded(self):
        det = detection_set([[50.0, 50.0, 50.0]])
        fused = assign_groundings(kneading_frame(place="man"), det)
        assert fused.grounding_of("Place") is None

    def test_null_noun_ungrounded(self):
        det = detection_set([[50.0, 50.0, 50.0]])
        fused = assign_groundings(kneading_frame(item=""), det)
        assert fused.grounding_of("Item") is None

    def test_two_roles_share_one_box(self):
        det = detection_set([[5.0, 1.0, 0.0], [2.0, 0.5, 0.0]])
        frame = GroundedFrame(
            "kneading",
            (("Agent", "man"), ("Item", "man"), ("Place", "kitchen")),
            (None, None, None),
        )
        fused = assign_groundings(frame, det)
        assert fused.grounding_of("Agent") == det.boxes[0]
        assert fused.grounding_of("Item") == det.boxes[0]

    def test_argmax_tie_breaks_to_lowest_index(self):
        det = detection_set([[2.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        fused = assign_groundings(kneading_frame(item="man"), det)
        assert fused.grounding_of("Agent") == det.boxes[0]

    def test_unknown_noun_errors(self):
        det = detection_set([[1.0, 1.0, 1.0]])
        with pytest.raises(FusionError, match="absent from detection vocabulary"):
            assign_groundings(kneading_frame(agent="cat"), det)

    def test_threshold_boundary_inclusive(self):
        det = detection_set([[-4.0, -4.001, 0.0]])
        fused = assign_groundings(kneading_frame(), det, threshold=-4.0)
        assert fused.grounding_of("Agent") == det.boxes[0]
        assert fused.grounding_of("Item") is None

    def test_output_boxes_come_from_input(self):
        rng = random.Random(4)
        scores = np.array([[rng.uniform(-8, 8) for _ in range(3)] for _ in range(10)])
        det = DetectionSet(tuple(make_box(rng) for _ in range(10)), scores, NOUN_INDEX)
        fused = assign_groundings(kneading_frame(), det)
        for box in fused.groundings:
            assert box is None or box in det.boxes

    def test_threshold_monotone(self):
        rng = random.Random(9)
        for _ in range(50):
            scores = np.array([[rng.uniform(-8, 8) for _ in range(3)] for _ in range(5)])
            det = DetectionSet(tuple(make_box(rng) for _ in range(5)), scores, NOUN_INDEX)
            frame = kneading_frame()
            counts = []
            for threshold in (-6.0, -4.0, -2.0, 0.0, 4.0):
                fused = assign_groundings(frame, det, threshold)
                counts.append(sum(b is not None for b in fused.groundings))
            assert counts == sorted(counts, reverse=True)

    def test_empty_detections(self):
        det = DetectionSet((), np.zeros((0, 3)), NOUN_INDEX)
        fused = assign_groundings(kneading_frame(), det)
        assert all(b is None for b in fused.groundings)
