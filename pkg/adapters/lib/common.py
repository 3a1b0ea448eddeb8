"""Shared adapter plumbing: config, dataset scanning, label parsing.

The adapters talk to the toolkit only through its on-disk formats, so the
little parsing needed here is reimplemented against the wire format rather
than imported.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass
class AdapterConfig:
    dataset_root: str
    output: str
    split: str = "train"
    candidates_per_box: int = 3
    model: dict = field(default_factory=dict)  # type/checkpoint/device/options

    def __post_init__(self):
        if self.candidates_per_box < 1:
            raise ValueError("candidates_per_box must be >= 1")


def load_config(path: str) -> AdapterConfig:
    return AdapterConfig(**json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class LabeledBox:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float


def parse_labels(path: Path) -> list[LabeledBox]:
    boxes = []
    if not path.exists():
        return boxes
    for line in path.read_text().splitlines():
        tokens = line.split()
        if not tokens:
            continue
        boxes.append(
            LabeledBox(int(tokens[0]), *(float(t) for t in tokens[1:5]))
        )
    return boxes


def _round_half_away(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def to_pixel_rect(box: LabeledBox, width: int, height: int) -> tuple[int, int, int, int]:
    """(x1, y1, x2, y2), clamped, never empty; matches the toolkit's convention."""
    x1 = max(0, min(width, _round_half_away((box.cx - box.w / 2) * width)))
    x2 = max(0, min(width, _round_half_away((box.cx + box.w / 2) * width)))
    y1 = max(0, min(height, _round_half_away((box.cy - box.h / 2) * height)))
    y2 = max(0, min(height, _round_half_away((box.cy + box.h / 2) * height)))
    if x1 == x2:
        x1, x2 = (x1 - 1, x2) if x2 == width else (x1, x2 + 1)
    if y1 == y2:
        y1, y2 = (y1 - 1, y2) if y2 == height else (y1, y2 + 1)
    return x1, y1, x2, y2


def iter_split(dataset_root: str, split: str):
    """Yield (image_id, image_path, label_path) for the requested split."""
    root = Path(dataset_root)
    images = {
        p.stem: p
        for p in sorted((root / "images").iterdir())
        if p.suffix.lower() in IMAGE_EXTENSIONS
    }
    split_file = root / f"{split}.txt"
    if split_file.exists():
        ids = [s for s in split_file.read_text().splitlines() if s.strip()]
    else:
        ids = sorted(images)
    for image_id in ids:
        yield image_id, images[image_id], root / "labels" / f"{image_id}.txt"


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
