"""Detection records and the box geometry used to link substructures.

A detector emits, per image, a list of class-labelled scored boxes.  The
engine expands every box by a margin proportional to the smallest box
diagonal in the image and treats two instances as intersecting when
their expanded boxes touch or overlap (closed rectangles).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Sequence

from .catalog import Catalog

__all__ = [
    "DetectionError",
    "BoundingBox",
    "DetectionInstance",
    "DetectionSet",
    "parse_detections",
    "dump_detections",
    "expansion_margin",
    "expand_box",
    "boxes_overlap",
    "filter_by_score",
]

REFERENCE_EXPANSION = 0.1


class DetectionError(ValueError):
    """Malformed or invalid detection record.

    ``line`` is the 1-based JSONL line number when known and ``field``
    names the offending field for invariant violations.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def empty(self) -> bool:
        return self.x_min > self.x_max or self.y_min > self.y_max

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def transformed(self, scale: float = 1.0, dx: float = 0.0, dy: float = 0.0) -> "BoundingBox":
        """Uniformly scale (about the origin) then translate."""
        return BoundingBox(
            self.x_min * scale + dx,
            self.y_min * scale + dy,
            self.x_max * scale + dx,
            self.y_max * scale + dy,
        )


@dataclass(frozen=True)
class DetectionInstance:
    instance_id: int
    class_id: int
    box: BoundingBox
    score: float = 1.0


@dataclass(frozen=True)
class DetectionSet:
    image_key: str
    instances: tuple[DetectionInstance, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))

    def __len__(self) -> int:
        return len(self.instances)

    def transformed(self, scale: float = 1.0, dx: float = 0.0, dy: float = 0.0) -> "DetectionSet":
        return replace(
            self,
            instances=tuple(replace(inst, box=inst.box.transformed(scale, dx, dy)) for inst in self.instances),
        )

    def to_json(self) -> dict:
        return {
            "image_key": self.image_key,
            "instances": [
                {
                    "instance_id": inst.instance_id,
                    "class_id": inst.class_id,
                    "score": inst.score,
                    "box": inst.box.as_list(),
                }
                for inst in self.instances
            ],
        }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)) and math.isfinite(value)


def _instance_from_json(obj, line: int | None, catalog: Catalog | None, idx: int) -> DetectionInstance:
    where = f"instances[{idx}]"
    if not isinstance(obj, dict):
        raise DetectionError("instance must be an object", line, where)
    for name in ("instance_id", "class_id", "box"):
        if name not in obj:
            raise DetectionError("missing field", line, f"{where}.{name}")
    instance_id = obj["instance_id"]
    if not _is_int(instance_id):
        raise DetectionError(f"expected integer, got {instance_id!r}", line, f"{where}.instance_id")
    class_id = obj["class_id"]
    if not _is_int(class_id) or class_id < 0:
        raise DetectionError(f"expected nonnegative integer, got {class_id!r}", line, f"{where}.class_id")
    if catalog is not None and class_id >= catalog.n:
        raise DetectionError(
            f"class {class_id} not in catalog of size {catalog.n}", line, f"{where}.class_id"
        )
    score = obj.get("score", 1.0)
    if not _is_real(score) or not 0.0 <= score <= 1.0:
        raise DetectionError(f"score must lie in [0, 1], got {score!r}", line, f"{where}.score")
    raw_box = obj["box"]
    if not isinstance(raw_box, list) or len(raw_box) != 4 or not all(_is_real(v) for v in raw_box):
        raise DetectionError("expected [x_min, y_min, x_max, y_max] of finite numbers", line, f"{where}.box")
    box = BoundingBox(*(float(v) for v in raw_box))
    if box.empty:
        raise DetectionError(f"min exceeds max in {raw_box}", line, f"{where}.box")
    # "mask" and other extra keys are accepted and ignored
    return DetectionInstance(instance_id, class_id, box, float(score))


def detection_set_from_json(obj, *, line: int | None = None, catalog: Catalog | None = None) -> DetectionSet:
    if not isinstance(obj, dict):
        raise DetectionError("record must be a JSON object", line)
    key = obj.get("image_key")
    if not isinstance(key, str):
        raise DetectionError("expected string", line, "image_key")
    raw = obj.get("instances", [])
    if not isinstance(raw, list):
        raise DetectionError("expected list", line, "instances")
    instances = [_instance_from_json(o, line, catalog, i) for i, o in enumerate(raw)]
    seen = set()
    for i, inst in enumerate(instances):
        if inst.instance_id in seen:
            raise DetectionError(
                f"duplicate instance_id {inst.instance_id}", line, f"instances[{i}].instance_id"
            )
        seen.add(inst.instance_id)
    return DetectionSet(key, tuple(instances))


def parse_detections(stream: IO | bytes | str, catalog: Catalog | None = None) -> list[DetectionSet]:
    """Parse detection JSONL, one :class:`DetectionSet` per non-blank line.

    ``stream`` may be a binary or text file object, or the raw content.
    When ``catalog`` is given, class ids are checked against its range.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    sets = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DetectionError(f"invalid UTF-8: {exc}", lineno) from None
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DetectionError(f"malformed JSON: {exc.msg}", lineno) from None
        sets.append(detection_set_from_json(obj, line=lineno, catalog=catalog))
    return sets


def dump_detections(sets: Iterable[DetectionSet]) -> str:
    """Serialize detection sets to JSONL text (stable key order)."""
    return "".join(json.dumps(s.to_json(), separators=(",", ":")) + "\n" for s in sets)


def filter_by_score(dset: DetectionSet, threshold: float) -> DetectionSet:
    """Drop instances scoring below ``threshold``; 0 keeps everything."""
    if threshold <= 0.0:
        return dset
    return replace(dset, instances=tuple(i for i in dset.instances if i.score >= threshold))


def expansion_margin(dset: DetectionSet | Sequence[BoundingBox], factor: float = REFERENCE_EXPANSION) -> float:
    """Margin = ``factor`` times the smallest box diagonal in the set."""
    boxes = [i.box for i in dset.instances] if isinstance(dset, DetectionSet) else list(dset)
    if not boxes:
        raise ValueError("expansion margin is undefined for a set without instances")
    return factor * min(b.diagonal for b in boxes)


def expand_box(box: BoundingBox, margin: float) -> BoundingBox:
    """Move each side outward by ``margin`` (inward when negative).

    The result is not clamped; a box shrunk past its centre reports
    ``empty``.
    """
    return BoundingBox(box.x_min - margin, box.y_min - margin, box.x_max + margin, box.y_max + margin)


def boxes_overlap(a: BoundingBox, b: BoundingBox) -> bool:
    if a.empty or b.empty:
        return False
    return a.x_min <= b.x_max and b.x_min <= a.x_max and a.y_min <= b.y_max and b.y_min <= a.y_max
