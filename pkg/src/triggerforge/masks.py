"""Candidate segmentation masks: loading, statistics, aspect-ratio selection.

Interchange layout produced by the segmenter adapter:
``<mask_root>/<image_id>/box<k>/m<i>.png`` -- 8-bit single-channel images,
255 = foreground (any value >= 128 counts), plus an optional ``meta.json``
per box directory carrying ``{"scores": [...]}`` in candidate order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .annotations import PixelBox
from .errors import AllCandidatesEmpty, DimensionMismatch, EmptyMask, MissingMasks

__all__ = [
    "SegmentationMask",
    "MaskCandidateSet",
    "MaskStats",
    "FOREGROUND_THRESHOLD",
    "load_candidates",
    "mask_stats",
    "select_mask",
]

FOREGROUND_THRESHOLD = 128

_CANDIDATE_RE = re.compile(r"^m(\d+)\.png$")


@dataclass(frozen=True)
class SegmentationMask:
    """Binary occupancy bitmap matching the source image's dimensions."""

    width: int
    height: int
    bitmap: np.ndarray  # bool, shape (height, width)
    source: str = ""  # file path, when loaded from disk

    def __post_init__(self):
        if self.bitmap.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"bitmap shape {self.bitmap.shape} != ({self.height}, {self.width})"
            )

    @property
    def is_empty(self) -> bool:
        return not bool(self.bitmap.any())


@dataclass(frozen=True)
class MaskCandidateSet:
    image_id: str
    box_index: int
    candidates: tuple[SegmentationMask, ...]
    scores: tuple[float, ...] | None = None


@dataclass(frozen=True)
class MaskStats:
    area: int
    bounding_rect: PixelBox
    aspect_ratio: float
    centroid_x: float
    centroid_y: float


def mask_from_array(arr: np.ndarray, source: str = "") -> SegmentationMask:
    """Wrap a 2-D array; values >= FOREGROUND_THRESHOLD (or truthy bools) are foreground."""
    if arr.dtype == bool:
        bitmap = arr
    else:
        bitmap = arr >= FOREGROUND_THRESHOLD
    h, w = bitmap.shape
    return SegmentationMask(width=w, height=h, bitmap=bitmap, source=source)


def load_candidates(
    mask_root: str | Path,
    image_id: str,
    box_index: int,
    expected_size: tuple[int, int] | None = None,
) -> MaskCandidateSet:
    """Load the candidate masks for one prompted box, in filename order.

    ``expected_size`` is (width, height) of the source image; when given,
    every candidate must match it. Empty candidates are retained (selection
    skips them later).
    """
    box_dir = Path(mask_root) / image_id / f"box{box_index}"
    entries = []
    if box_dir.is_dir():
        for p in box_dir.iterdir():
            m = _CANDIDATE_RE.match(p.name)
            if m:
                entries.append((int(m.group(1)), p))
    if not entries:
        raise MissingMasks(f"no candidate masks under {box_dir}")
    entries.sort()

    candidates = []
    for _, path in entries:
        arr = np.asarray(PILImage.open(path).convert("L"))
        mask = mask_from_array(arr, source=str(path))
        if expected_size is not None and (mask.width, mask.height) != expected_size:
            raise DimensionMismatch(
                f"{path}: mask is {mask.width}x{mask.height}, "
                f"image is {expected_size[0]}x{expected_size[1]}"
            )
        candidates.append(mask)
    if expected_size is None:
        sizes = {(c.width, c.height) for c in candidates}
        if len(sizes) > 1:
            raise DimensionMismatch(f"candidates disagree on dimensions: {sizes}")

    scores = None
    meta_path = box_dir / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if "scores" in meta:
            scores = tuple(float(s) for s in meta["scores"])
    return MaskCandidateSet(
        image_id=image_id,
        box_index=box_index,
        candidates=tuple(candidates),
        scores=scores,
    )


def mask_stats(mask: SegmentationMask) -> MaskStats:
    """Tight bounding rect, max/min aspect ratio, and foreground centroid."""
    ys, xs = np.nonzero(mask.bitmap)
    if xs.size == 0:
        raise EmptyMask(f"mask has no foreground pixels ({mask.source or 'in-memory'})")
    rect = PixelBox(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
    long_side = max(rect.width, rect.height)
    short_side = min(rect.width, rect.height)
    return MaskStats(
        area=int(xs.size),
        bounding_rect=rect,
        aspect_ratio=long_side / short_side,
        centroid_x=float(xs.mean()),
        centroid_y=float(ys.mean()),
    )


def select_mask(
    candidates: MaskCandidateSet,
) -> tuple[int, SegmentationMask, MaskStats]:
    """Pick the non-empty candidate with the highest aspect ratio.

    Ties go to the lowest candidate index; empty candidates are skipped.
    """
    best = None
    for i, mask in enumerate(candidates.candidates):
        if mask.is_empty:
            continue
        stats = mask_stats(mask)
        if best is None or stats.aspect_ratio > best[2].aspect_ratio:
            best = (i, mask, stats)
    if best is None:
        raise AllCandidatesEmpty(
            f"all candidates empty for {candidates.image_id} box {candidates.box_index}"
        )
    return best
