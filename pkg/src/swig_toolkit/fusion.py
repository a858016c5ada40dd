"""Late fusion: assign detector boxes to the nouns of a predicted frame.

For each non-null, non-Place role, the box with the highest detector
logit for that role's noun is assigned, unless even the best logit falls
below the threshold (default -4), in which case the role stays
ungrounded. The same box may serve multiple roles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame_model import NULL_NOUN, PLACE_ROLE, GroundedFrame

DEFAULT_FUSION_THRESHOLD = -4.0


class FusionError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionSet:
    """Post-NMS detector output: boxes and per-box noun logits.

    noun_scores has one row per box and one column per vocabulary noun;
    noun_index maps noun id to its column.
    """

    boxes: tuple  # of BoundingBox
    noun_scores: np.ndarray  # shape (len(boxes), |vocabulary|)
    noun_index: dict  # noun id -> column

    def __post_init__(self):
        if self.noun_scores.shape[0] != len(self.boxes):
            raise FusionError(
                f"score matrix has {self.noun_scores.shape[0]} rows for "
                f"{len(self.boxes)} boxes"
            )
        if not np.all(np.isfinite(self.noun_scores)):
            raise FusionError("noun scores must be finite")


def assign_groundings(frame: GroundedFrame, detections: DetectionSet,
                      threshold: float = DEFAULT_FUSION_THRESHOLD) -> GroundedFrame:
    """Return a copy of `frame` with groundings filled from `detections`.

    Null-noun roles and the Place role are always left ungrounded. Argmax
    ties break to the lowest box index.
    """
    groundings = []
    for role, noun in frame.role_values:
        if noun == NULL_NOUN or role == PLACE_ROLE or len(detections.boxes) == 0:
            groundings.append(None)
            continue
        if noun not in detections.noun_index:
            raise FusionError(f"noun {noun!r} absent from detection vocabulary")
        col = detections.noun_scores[:, detections.noun_index[noun]]
        best = int(np.argmax(col))  # np.argmax returns the first maximum
        groundings.append(detections.boxes[best] if col[best] >= threshold else None)
    return GroundedFrame(frame.verb, frame.role_values, tuple(groundings))
