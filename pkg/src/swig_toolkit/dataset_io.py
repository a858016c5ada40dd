"""Dataset and prediction file parsing, worker-box merging, corpus statistics.

Canonical file formats (UTF-8 JSON):

  lexicon:     {verb: [role, ...], ...}
  vocabulary:  {noun_id: gloss_or_null, ...} or [noun_id, ...]
  dataset:     [{"id", "width", "height", "verb",
                 "frames": [{role: noun_or_""} x3],
                 "boxes": {role: [x1,y1,x2,y2] or null}}, ...]
               A record may carry "worker_boxes": {role: [box x3]} instead of
               "boxes"; the three worker boxes are merged by coordinate mean.
  predictions: [{"id", "verbs": [verb, ...],
                 "frames": {verb: {"nouns": {role: noun},
                                   "boxes": {role: box_or_null},
                                   "grounded": {role: bool}  # optional
                                  }}}, ...]

The adapter sentinel box [-1,-1,-1,-1] is read as "no grounding".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .frame_model import (
    NULL_NOUN,
    PLACE_ROLE,
    AnnotatedImage,
    BoundingBox,
    FrameModelError,
    GroundedFrame,
    NounVocabulary,
    PredictionRecord,
    VerbEntry,
    VerbLexicon,
    validate_frame,
)

SENTINEL_BOX = [-1, -1, -1, -1]


class DatasetError(ValueError):
    """Raised when a dataset, lexicon, or prediction file is malformed."""


@dataclass(frozen=True)
class Dataset:
    lexicon: VerbLexicon
    vocabulary: NounVocabulary
    images: tuple  # of AnnotatedImage
    split: str = "unspecified"


@dataclass
class StatsReport:
    """Corpus statistics over all annotator frames of a dataset."""

    total_images: int = 0
    total_verbs: int = 0
    total_noun_slots: int = 0
    non_null_slots: int = 0
    grounded_slots: int = 0
    mean_frame_length: float = 0.0
    groundings_per_noun: dict = field(default_factory=dict)
    role_grounding_rate: dict = field(default_factory=dict)
    scale_aspect_samples: list = field(default_factory=list)

    @property
    def grounded_fraction(self) -> float:
        return self.grounded_slots / self.non_null_slots if self.non_null_slots else 0.0

    def to_dict(self) -> dict:
        return {
            "total_images": self.total_images,
            "total_verbs": self.total_verbs,
            "total_noun_slots": self.total_noun_slots,
            "non_null_slots": self.non_null_slots,
            "grounded_slots": self.grounded_slots,
            "grounded_fraction": round(self.grounded_fraction, 4),
            "mean_frame_length": self.mean_frame_length,
            "groundings_per_noun": self.groundings_per_noun,
            "role_grounding_rate": self.role_grounding_rate,
            "scale_aspect_samples": [
                {"noun": n, "verb": v, "role": r, "scale": s, "aspect": a}
                for n, v, r, s, a in self.scale_aspect_samples
            ],
        }


def parse_lexicon(obj: dict) -> VerbLexicon:
    if not isinstance(obj, dict) or not obj:
        raise DatasetError("lexicon must be a non-empty JSON object {verb: [roles]}")
    entries = {}
    for verb, roles in obj.items():
        if not isinstance(roles, list) or not all(isinstance(r, str) for r in roles):
            raise DatasetError(f"lexicon entry {verb!r}: roles must be a list of strings")
        try:
            entries[verb] = VerbEntry(verb, tuple(roles))
        except FrameModelError as e:
            raise DatasetError(str(e)) from e
    return VerbLexicon(entries)


def parse_vocabulary(obj) -> NounVocabulary:
    if isinstance(obj, dict):
        ids = frozenset(obj.keys()) - {NULL_NOUN}
        glosses = {k: v for k, v in obj.items() if isinstance(v, str)}
        return NounVocabulary(ids, glosses)
    if isinstance(obj, list):
        return NounVocabulary(frozenset(obj) - {NULL_NOUN})
    raise DatasetError("vocabulary must be a JSON object or array of noun ids")


def _parse_box(raw, image_id: str, role: str) -> Optional[BoundingBox]:
    if raw is None or raw == SENTINEL_BOX:
        return None
    if not (isinstance(raw, list) and len(raw) == 4):
        raise DatasetError(f"image {image_id!r}, role {role!r}: box must be [x1,y1,x2,y2] or null")
    try:
        return BoundingBox(*(float(c) for c in raw))
    except (FrameModelError, TypeError, ValueError) as e:
        raise DatasetError(f"image {image_id!r}, role {role!r}: {e}") from e


def merge_worker_boxes(boxes: list, allow_any_count: bool = False) -> BoundingBox:
    """Merge worker annotations by coordinate-wise arithmetic mean.

    Exactly 3 boxes are required unless allow_any_count relaxes the rule
    for fixtures.
    """
    if len(boxes) != 3 and not (allow_any_count and boxes):
        raise DatasetError(f"expected exactly 3 worker boxes, got {len(boxes)}")
    n = len(boxes)
    return BoundingBox(
        sum(b.x1 for b in boxes) / n,
        sum(b.y1 for b in boxes) / n,
        sum(b.x2 for b in boxes) / n,
        sum(b.y2 for b in boxes) / n,
    )


def _parse_image(rec: dict, lexicon: VerbLexicon, vocabulary: NounVocabulary,
                 warnings: list, index: int) -> AnnotatedImage:
    image_id = rec.get("id")
    if not isinstance(image_id, str):
        raise DatasetError(f"record #{index}: missing or non-string 'id'")
    for fld in ("width", "height", "verb", "frames"):
        if fld not in rec:
            raise DatasetError(f"image {image_id!r}: missing field {fld!r} (record #{index})")
    width, height = rec["width"], rec["height"]
    verb = rec["verb"]
    if verb not in lexicon:
        raise DatasetError(f"image {image_id!r}: unknown verb {verb!r}")
    roles = lexicon.roles(verb)

    raw_frames = rec["frames"]
    if not (isinstance(raw_frames, list) and len(raw_frames) == 3):
        raise DatasetError(f"image {image_id!r}: 'frames' must list exactly 3 annotator frames")
    frames = []
    for ann, raw in enumerate(raw_frames):
        values = []
        for role in roles:
            if role not in raw:
                raise DatasetError(
                    f"image {image_id!r}: annotator {ann} missing role {role!r}"
                )
            noun = raw[role]
            if noun != NULL_NOUN and noun not in vocabulary:
                raise DatasetError(
                    f"image {image_id!r}: annotator {ann} role {role!r}: unknown noun {noun!r}"
                )
            values.append((role, noun))
        frames.append(GroundedFrame(verb, tuple(values), (None,) * len(roles)))

    if "worker_boxes" in rec:
        gt = {}
        for role in roles:
            raw_list = rec["worker_boxes"].get(role)
            if raw_list is None:
                gt[role] = None
                continue
            workers = [_parse_box(b, image_id, role) for b in raw_list]
            workers = [b for b in workers if b is not None]
            gt[role] = merge_worker_boxes(workers) if workers else None
    else:
        raw_boxes = rec.get("boxes", {})
        gt = {role: _parse_box(raw_boxes.get(role), image_id, role) for role in roles}

    for role, box in gt.items():
        if box is None:
            continue
        clamped = box.clamped(width, height)
        if clamped != box:
            warnings.append(f"image {image_id!r}, role {role!r}: box clamped to image bounds")
            gt[role] = clamped

    return AnnotatedImage(image_id, width, height, verb, tuple(frames), gt)


def load_dataset(annotation_source, lexicon_source, vocabulary_source,
                 split: str = "unspecified", warnings: Optional[list] = None) -> Dataset:
    """Parse and validate a dataset from JSON sources (paths or parsed objects).

    Raises DatasetError naming the offending image and field on any
    malformed record, unknown verb, or unknown noun.
    """
    lexicon = parse_lexicon(_read_json(lexicon_source))
    vocabulary = parse_vocabulary(_read_json(vocabulary_source))
    records = _read_json(annotation_source)
    if not isinstance(records, list):
        raise DatasetError("dataset file must be a JSON array of image records")
    if warnings is None:
        warnings = []
    images = []
    seen = set()
    for i, rec in enumerate(records):
        img = _parse_image(rec, lexicon, vocabulary, warnings, i)
        if img.image_id in seen:
            raise DatasetError(f"duplicate image id {img.image_id!r}")
        seen.add(img.image_id)
        for frame in img.annotator_frames:
            violations = validate_frame(frame, lexicon)
            if violations:
                raise DatasetError(
                    f"image {img.image_id!r}: invalid frame: "
                    + "; ".join(v.rule for v in violations)
                )
        images.append(img)
    return Dataset(lexicon, vocabulary, tuple(images), split)


def load_predictions(source, lexicon: VerbLexicon) -> list:
    """Parse a prediction file into PredictionRecords."""
    records = _read_json(source)
    if not isinstance(records, list):
        raise DatasetError("prediction file must be a JSON array")
    out = []
    for i, rec in enumerate(records):
        image_id = rec.get("id")
        if not isinstance(image_id, str):
            raise DatasetError(f"prediction record #{i}: missing or non-string 'id'")
        verbs = rec.get("verbs")
        if not (isinstance(verbs, list) and verbs):
            raise DatasetError(f"prediction {image_id!r}: 'verbs' must be a non-empty list")
        frames = {}
        flags = {}
        for verb, raw in rec.get("frames", {}).items():
            if verb not in lexicon:
                raise DatasetError(f"prediction {image_id!r}: unknown verb {verb!r}")
            roles = lexicon.roles(verb)
            nouns = raw.get("nouns", {})
            boxes = raw.get("boxes", {})
            grounded = raw.get("grounded")
            values, groundings, role_flags = [], [], []
            for role in roles:
                if role not in nouns:
                    raise DatasetError(
                        f"prediction {image_id!r}, verb {verb!r}: missing noun for role {role!r}"
                    )
                values.append((role, nouns[role]))
                box = _parse_box(boxes.get(role), image_id, role)
                flag = grounded[role] if grounded and role in grounded else box is not None
                groundings.append(box if flag else None)
                role_flags.append(bool(flag) and box is not None)
            frames[verb] = GroundedFrame(verb, tuple(values), tuple(groundings))
            flags[verb] = tuple(role_flags)
        out.append(PredictionRecord(image_id, tuple(verbs), frames, flags))
    return out


def compute_stats(dataset: Dataset) -> StatsReport:
    """Corpus statistics: noun-slot counts, grounding rates, scale/aspect samples.

    A noun slot is one (image, annotator, role) triple; a slot is grounded
    when its noun is non-null and the merged gt box for its role exists.
    scale = max(box_w/img_w, box_h/img_h); aspect = box_h/box_w.
    """
    report = StatsReport()
    report.total_images = len(dataset.images)
    report.total_verbs = len({img.verb for img in dataset.images})
    role_total = {}
    role_grounded = {}
    frame_length_sum = 0
    for img in dataset.images:
        roles = dataset.lexicon.roles(img.verb)
        frame_length_sum += len(roles)
        for frame in img.annotator_frames:
            for role, noun in frame.role_values:
                report.total_noun_slots += 1
                role_total[role] = role_total.get(role, 0) + 1
                if noun == NULL_NOUN:
                    continue
                report.non_null_slots += 1
                box = img.gt_groundings.get(role)
                if box is not None:
                    report.grounded_slots += 1
                    role_grounded[role] = role_grounded.get(role, 0) + 1
                    report.groundings_per_noun[noun] = (
                        report.groundings_per_noun.get(noun, 0) + 1
                    )
        for role, box in img.gt_groundings.items():
            if box is None or box.width <= 0:
                continue
            noun = next(
                (f.noun_of(role) for f in img.annotator_frames if f.noun_of(role) != NULL_NOUN),
                NULL_NOUN,
            )
            scale = max(box.width / img.width, box.height / img.height)
            aspect = box.height / box.width
            report.scale_aspect_samples.append((noun, img.verb, role, scale, aspect))
    report.role_grounding_rate = {
        role: role_grounded.get(role, 0) / total for role, total in sorted(role_total.items())
    }
    if dataset.images:
        report.mean_frame_length = frame_length_sum / len(dataset.images)
    return report


def _read_json(source):
    """Accept a path, a file object, or an already-parsed JSON value."""
    if isinstance(source, (dict, list)):
        return source
    if hasattr(source, "read"):
        return json.load(source)
    with open(source, "r", encoding="utf-8") as f:
        return json.load(f)


def frame_to_json(frame: GroundedFrame) -> dict:
    return {
        "verb": frame.verb,
        "nouns": {role: noun for role, noun in frame.role_values},
        "boxes": {
            role: (box.as_list() if box is not None else None)
            for (role, _), box in zip(frame.role_values, frame.groundings)
        },
    }
