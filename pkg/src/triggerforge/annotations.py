"""Normalized-box label files: parsing, writing, pixel conversion, class rewriting.

Label format is one object per line, ``<class_id> <cx> <cy> <w> <h>``, where the
four box fields are fractions of image width/height in center format. Output
always formats floats with 6 decimals so serialization is byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ClassOutOfRange, CoordOutOfRange, MalformedLine

__all__ = [
    "ClassMap",
    "Annotation",
    "PixelBox",
    "LabelFile",
    "DEFAULT_CLASSES",
    "parse_label_file",
    "write_label_file",
    "to_pixel_box",
    "rewrite_class",
    "round_half_away",
]


def round_half_away(x: float) -> int:
    """Round with halves going away from zero, identically on every platform."""
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


@dataclass(frozen=True)
class ClassMap:
    """Ordered class-name universe; a class ID is an index into ``names``."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("class map must not be empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        if any(not n for n in self.names):
            raise ValueError("class names must be non-empty")

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        return self.names.index(name)


#: Five mushroom classes; IDs follow listing order. Override via ClassMap when
#: a dataset uses a different ordering.
DEFAULT_CLASSES = ClassMap(
    (
        "E-Amanita-citrina",
        "E-Phaeogyroporus",
        "E-Russula-delica",
        "P-Amanita-phalloides",
        "P-Inocybe-rimosa",
    )
)


@dataclass(frozen=True)
class Annotation:
    """One labeled object: class ID plus normalized center-format box."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float


@dataclass(frozen=True)
class PixelBox:
    """Integer pixel rectangle, x2/y2 exclusive, origin top-left."""

    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class LabelFile:
    image_id: str
    annotations: tuple[Annotation, ...]


def _validate_annotation(a: Annotation, line_no: int, n_classes: int) -> None:
    if a.class_id < 0 or a.class_id >= n_classes:
        raise ClassOutOfRange(line_no, a.class_id, n_classes)
    for field, lo_open in (("cx", False), ("cy", False), ("w", True), ("h", True)):
        v = getattr(a, field)
        if not (0.0 <= v <= 1.0) or (lo_open and v == 0.0):
            raise CoordOutOfRange(line_no, field, v)


def parse_label_file(text: str, class_map: ClassMap, image_id: str = "") -> LabelFile:
    """Parse one label file. Blank lines are skipped; order is preserved."""
    annotations = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 5:
            raise MalformedLine(line_no, raw, f"expected 5 tokens, got {len(tokens)}")
        try:
            class_id = int(tokens[0])
            cx, cy, w, h = (float(t) for t in tokens[1:])
        except ValueError:
            raise MalformedLine(line_no, raw, "non-numeric token") from None
        a = Annotation(class_id, cx, cy, w, h)
        _validate_annotation(a, line_no, len(class_map))
        annotations.append(a)
    return LabelFile(image_id=image_id, annotations=tuple(annotations))


def write_label_file(labels: LabelFile) -> str:
    """Serialize to the on-disk format: 6-decimal floats, one line per object."""
    return "".join(
        f"{a.class_id} {a.cx:.6f} {a.cy:.6f} {a.w:.6f} {a.h:.6f}\n"
        for a in labels.annotations
    )


def to_pixel_box(a: Annotation, width: int, height: int) -> PixelBox:
    """Convert a normalized box to integer pixel coordinates.

    Edges are rounded half-away-from-zero, clamped to the image, and a box
    that collapses to zero width or height is widened by one pixel toward the
    image interior so downstream consumers always receive a nonempty rect.
    """
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    x1 = max(0, min(width, round_half_away((a.cx - a.w / 2) * width)))
    x2 = max(0, min(width, round_half_away((a.cx + a.w / 2) * width)))
    y1 = max(0, min(height, round_half_away((a.cy - a.h / 2) * height)))
    y2 = max(0, min(height, round_half_away((a.cy + a.h / 2) * height)))
    if x1 == x2:
        x1, x2 = (x1 - 1, x2) if x2 == width else (x1, x2 + 1)
    if y1 == y2:
        y1, y2 = (y1 - 1, y2) if y2 == height else (y1, y2 + 1)
    return PixelBox(x1, y1, x2, y2)


def rewrite_class(labels: LabelFile, source: int, target: int) -> LabelFile:
    """Replace the class ID of every source-class object, boxes untouched."""
    if source == target:
        raise ValueError("source and target class must differ")
    if source < 0 or target < 0:
        raise ValueError("class ids must be nonnegative")
    return LabelFile(
        image_id=labels.image_id,
        annotations=tuple(
            replace(a, class_id=target) if a.class_id == source else a
            for a in labels.annotations
        ),
    )
