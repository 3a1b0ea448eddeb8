"""Trigger synthesis: dominant-color extraction and cross-hatched circle rendering.

Images are uint8 RGB arrays of shape (height, width, 3). Triggered images are
always saved as PNG; lossy recompression would destroy the pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .annotations import round_half_away
from .errors import DimensionMismatch, EmptyMask
from .masks import MaskStats, SegmentationMask

__all__ = [
    "Color",
    "TriggerSpec",
    "dominant_color",
    "resolve_trigger",
    "render_trigger",
    "load_image",
    "save_png",
]


@dataclass(frozen=True)
class Color:
    r: int
    g: int
    b: int

    def __post_init__(self):
        for v in (self.r, self.g, self.b):
            if not (0 <= v <= 255):
                raise ValueError(f"channel value {v} out of 0..255")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.r, self.g, self.b)


@dataclass(frozen=True)
class TriggerSpec:
    """Fully resolved trigger geometry and color for one image."""

    center_x: int
    center_y: int
    radius: int
    fill: Color
    hatch_spacing: int = 6
    hatch_width: int = 1
    hatch_shade: float = 0.6

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.hatch_spacing <= 0 or self.hatch_width < 1:
            raise ValueError("hatch spacing must be > 0 and width >= 1")
        if self.hatch_width >= self.hatch_spacing:
            raise ValueError("hatch_width must be < hatch_spacing")
        if not (0.0 < self.hatch_shade <= 1.0):
            raise ValueError("hatch_shade must be in (0, 1]")


def load_image(path: str | Path) -> np.ndarray:
    return np.asarray(PILImage.open(path).convert("RGB"))


def save_png(image: np.ndarray, path: str | Path) -> None:
    PILImage.fromarray(image, mode="RGB").save(path, format="PNG")


def dominant_color(
    image: np.ndarray, mask: SegmentationMask, bin_width: int = 16
) -> Color:
    """Modal quantized color of the masked region.

    Foreground pixels are quantized into bins of ``bin_width`` per channel;
    the result is the per-channel mean of the pixels in the most populated
    bin, ties broken by lowest bin index (r-major, then g, then b).
    """
    if image.shape[:2] != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image {image.shape[1]}x{image.shape[0]} vs mask {mask.width}x{mask.height}"
        )
    fg = image[mask.bitmap]
    if fg.size == 0:
        raise EmptyMask("cannot take dominant color of an empty mask")
    bins = fg // bin_width
    uniq, inverse, counts = np.unique(
        bins, axis=0, return_inverse=True, return_counts=True
    )
    # np.unique sorts rows lexicographically, so argmax lands on the lowest
    # (r, g, b) bin among count ties.
    winner = int(np.argmax(counts))
    mean = fg[inverse == winner].mean(axis=0)
    return Color(*(round_half_away(float(v)) for v in mean))


def resolve_trigger(
    stats: MaskStats,
    image: np.ndarray,
    mask: SegmentationMask,
    radius: int = 20,
    hatch_spacing: int = 6,
    hatch_width: int = 1,
    hatch_shade: float = 0.6,
    color_bin_width: int = 16,
    fill: Color | None = None,
) -> TriggerSpec:
    """Place the trigger at the mask centroid, colored by the masked region.

    ``fill`` overrides the dominant-color rule (used by high-contrast demos);
    the resolved spec records every parameter so campaigns can be replayed.
    """
    if fill is None:
        fill = dominant_color(image, mask, bin_width=color_bin_width)
    return TriggerSpec(
        center_x=round_half_away(stats.centroid_x),
        center_y=round_half_away(stats.centroid_y),
        radius=radius,
        fill=fill,
        hatch_spacing=hatch_spacing,
        hatch_width=hatch_width,
        hatch_shade=hatch_shade,
    )


def _shaded(fill: Color, shade: float) -> tuple[int, int, int]:
    return tuple(round_half_away(c * shade) for c in fill.as_tuple())


def render_trigger(image: np.ndarray, spec: TriggerSpec) -> np.ndarray:
    """Stamp the solid circle with cross-hatch shading; clipped at the borders.

    Pixels strictly outside the disk (Euclidean distance > radius from the
    center) are bit-identical to the input.
    """
    h, w = image.shape[:2]
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    disk = (xs - spec.center_x) ** 2 + (ys - spec.center_y) ** 2 <= spec.radius**2
    hatch = ((xs + ys) % spec.hatch_spacing < spec.hatch_width) | (
        (xs - ys) % spec.hatch_spacing < spec.hatch_width
    )
    out = image.copy()
    out[disk] = spec.fill.as_tuple()
    out[disk & hatch] = _shaded(spec.fill, spec.hatch_shade)
    return out
