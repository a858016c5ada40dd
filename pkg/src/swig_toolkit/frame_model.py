"""Domain types for verbs, roles, nouns, frames, and groundings.

All types are immutable after construction and safe to share across
threads. The null noun value is encoded as the empty string "" in files
and in memory; a role that is absent from a record entirely is a
structural error, not a null value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

NULL_NOUN = ""
PLACE_ROLE = "Place"


class FrameModelError(ValueError):
    """Raised when a domain type is constructed from invalid data."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box [x1, y1, x2, y2] in pixels, origin top-left."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(isinstance(c, (int, float)) and c == c and abs(c) != float("inf") for c in coords):
            raise FrameModelError(f"box coordinates must be finite: {coords}")
        if min(coords) < 0:
            raise FrameModelError(f"box coordinates must be >= 0: {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise FrameModelError(f"box must satisfy x1 < x2 and y1 < y2: {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def clamped(self, width: float, height: float) -> "BoundingBox":
        """Clamp to the image rectangle [0, width] x [0, height]."""
        return BoundingBox(
            min(max(self.x1, 0.0), width),
            min(max(self.y1, 0.0), height),
            min(max(self.x2, 0.0), width),
            min(max(self.y2, 0.0), height),
        )

    def as_list(self) -> list:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class VerbEntry:
    """One verb and its fixed, ordered role list (1 to 6 roles)."""

    verb: str
    roles: tuple

    def __post_init__(self):
        if not 1 <= len(self.roles) <= 6:
            raise FrameModelError(f"verb {self.verb!r} must have 1..6 roles, got {len(self.roles)}")
        if len(set(self.roles)) != len(self.roles):
            raise FrameModelError(f"verb {self.verb!r} has duplicate role names")


@dataclass(frozen=True)
class VerbLexicon:
    """Catalog mapping verb id to its VerbEntry. Role order is authoritative."""

    entries: dict

    def __post_init__(self):
        if not self.entries:
            raise FrameModelError("lexicon must contain at least one verb")

    def __contains__(self, verb: str) -> bool:
        return verb in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def roles(self, verb: str) -> tuple:
        return self.entries[verb].roles


@dataclass(frozen=True)
class NounVocabulary:
    """Set of noun ids with optional glosses. The null value "" is not a member."""

    ids: frozenset
    glosses: dict = field(default_factory=dict)

    def __post_init__(self):
        if NULL_NOUN in self.ids:
            raise FrameModelError('the null noun "" may not be a vocabulary member')

    def __contains__(self, noun: str) -> bool:
        return noun in self.ids

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class GroundedFrame:
    """One verb, ordered (role, noun) pairs, and parallel optional groundings."""

    verb: str
    role_values: tuple  # of (role, noun) pairs; noun == "" means null
    groundings: tuple  # of Optional[BoundingBox], parallel to role_values

    def __post_init__(self):
        if len(self.role_values) != len(self.groundings):
            raise FrameModelError(
                f"frame for {self.verb!r}: {len(self.role_values)} roles but "
                f"{len(self.groundings)} groundings"
            )

    @property
    def roles(self) -> tuple:
        return tuple(r for r, _ in self.role_values)

    @property
    def nouns(self) -> tuple:
        return tuple(n for _, n in self.role_values)

    def noun_of(self, role: str) -> str:
        for r, n in self.role_values:
            if r == role:
                return n
        raise KeyError(role)

    def grounding_of(self, role: str) -> Optional[BoundingBox]:
        for i, (r, _) in enumerate(self.role_values):
            if r == role:
                return self.groundings[i]
        raise KeyError(role)


@dataclass(frozen=True)
class AnnotatedImage:
    """Ground-truth record: three annotator frames plus merged per-role boxes."""

    image_id: str
    width: int
    height: int
    verb: str
    annotator_frames: tuple  # exactly 3 GroundedFrames, nouns only
    gt_groundings: dict  # role -> Optional[BoundingBox], merged

    def __post_init__(self):
        if len(self.annotator_frames) != 3:
            raise FrameModelError(
                f"image {self.image_id!r}: expected 3 annotator frames, got "
                f"{len(self.annotator_frames)}"
            )
        for f in self.annotator_frames:
            if f.verb != self.verb:
                raise FrameModelError(
                    f"image {self.image_id!r}: annotator frame verb {f.verb!r} "
                    f"differs from image verb {self.verb!r}"
                )

    @property
    def roles(self) -> tuple:
        return self.annotator_frames[0].roles


@dataclass(frozen=True)
class PredictionRecord:
    """Model output: ranked verb hypotheses and per-verb predicted frames."""

    image_id: str
    verb_ranking: tuple  # of verb ids, best first
    frames: dict  # verb -> GroundedFrame
    grounded_flags: dict  # verb -> tuple of bool, parallel to frame roles

    def __post_init__(self):
        if not self.verb_ranking:
            raise FrameModelError(f"prediction {self.image_id!r}: empty verb ranking")
        for verb in self.frames:
            if verb not in self.verb_ranking:
                raise FrameModelError(
                    f"prediction {self.image_id!r}: frame verb {verb!r} not in ranking"
                )


@dataclass(frozen=True)
class Violation:
    """One structural rule violation; role_index is -1 for frame-level rules."""

    rule: str
    role_index: int
    detail: str = ""


def validate_frame(frame: GroundedFrame, lexicon: VerbLexicon) -> list:
    """Check a frame against the lexicon; returns a list of Violations.

    A valid frame yields an empty list. Violations are data, not
    exceptions: every broken invariant is reported with its role index.
    """
    report = []
    if frame.verb not in lexicon:
        report.append(Violation("unknown-verb", -1, frame.verb))
        return report
    expected = lexicon.roles(frame.verb)
    if frame.roles != expected:
        report.append(
            Violation(
                "role-mismatch",
                -1,
                f"expected {list(expected)}, got {list(frame.roles)}",
            )
        )
    for i, ((role, noun), box) in enumerate(zip(frame.role_values, frame.groundings)):
        if noun == NULL_NOUN and box is not None:
            report.append(Violation("null-noun-grounded", i, role))
        if role == PLACE_ROLE and box is not None:
            report.append(Violation("place-grounded", i, role))
    return report
