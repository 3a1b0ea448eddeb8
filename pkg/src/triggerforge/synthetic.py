"""Seeded synthetic fixture generator: colored ellipses on noisy backgrounds.

Produces a complete desk-scale dataset in the standard layout (images/,
labels/, train.txt, val.txt) plus a programmatic candidate-mask tree, so the
whole poisoning pipeline runs without any external segmenter.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .annotations import Annotation, LabelFile, write_label_file
from .trigger import save_png

__all__ = ["FixtureSpec", "generate_fixture"]

# Well-separated palette, one entry per class id.
_PALETTE = (
    (205, 60, 50),
    (60, 190, 70),
    (60, 80, 205),
    (210, 200, 55),
    (165, 60, 200),
)


@dataclass(frozen=True)
class FixtureSpec:
    n_images: int = 200
    n_classes: int = 5
    image_size: int = 96
    seed: int = 0
    val_every: int = 4  # every k-th image goes to the validation split
    min_radius: int = 14
    max_radius: int = 22


def _ellipse_mask(size: int, cx: int, cy: int, rx: int, ry: int) -> np.ndarray:
    ys = np.arange(size)[:, None]
    xs = np.arange(size)[None, :]
    return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0


def generate_fixture(
    dataset_root: str | Path, mask_root: str | Path, spec: FixtureSpec = FixtureSpec()
) -> list[str]:
    """Write the fixture tree and return the image ids in order.

    Each image holds one ellipse "mushroom" of a class-specific color on a
    noisy gray background. Three candidate masks are written per box: the
    exact ellipse, a shrunken ellipse, and the bounding-rect fill.
    """
    dataset_root = Path(dataset_root)
    mask_root = Path(mask_root)
    (dataset_root / "images").mkdir(parents=True, exist_ok=True)
    (dataset_root / "labels").mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(spec.seed)
    size = spec.image_size
    ids, train_ids, val_ids = [], [], []
    for i in range(spec.n_images):
        image_id = f"img_{i:04d}"
        class_id = i % spec.n_classes
        rx = int(rng.integers(spec.min_radius, spec.max_radius + 1))
        ry = int(rng.integers(spec.min_radius, spec.max_radius + 1))
        cx = int(rng.integers(rx + 2, size - rx - 2))
        cy = int(rng.integers(ry + 2, size - ry - 2))

        base = _PALETTE[class_id % len(_PALETTE)]
        jitter = rng.integers(-12, 13, size=3)
        color = np.clip(np.asarray(base) + jitter, 0, 255).astype(np.uint8)

        image = rng.integers(80, 101, size=(size, size, 3)).astype(np.uint8)
        ellipse = _ellipse_mask(size, cx, cy, rx, ry)
        image[ellipse] = color
        save_png(image, dataset_root / "images" / f"{image_id}.png")

        box = Annotation(
            class_id=class_id,
            cx=(cx + 0.5) / size,
            cy=(cy + 0.5) / size,
            w=(2 * rx + 1) / size,
            h=(2 * ry + 1) / size,
        )
        labels = LabelFile(image_id=image_id, annotations=(box,))
        (dataset_root / "labels" / f"{image_id}.txt").write_text(
            write_label_file(labels)
        )

        box_dir = mask_root / image_id / "box0"
        box_dir.mkdir(parents=True, exist_ok=True)
        shrunk = _ellipse_mask(size, cx, cy, max(2, int(rx * 0.7)), max(2, int(ry * 0.7)))
        rect = np.zeros((size, size), dtype=bool)
        rect[cy - ry : cy + ry + 1, cx - rx : cx + rx + 1] = True
        for k, m in enumerate((ellipse, shrunk, rect)):
            PILImage.fromarray((m * 255).astype(np.uint8), mode="L").save(
                box_dir / f"m{k}.png", format="PNG"
            )

        ids.append(image_id)
        if (i + 1) % spec.val_every == 0:
            val_ids.append(image_id)
        else:
            train_ids.append(image_id)

    (dataset_root / "train.txt").write_text("".join(s + "\n" for s in train_ids))
    (dataset_root / "val.txt").write_text("".join(s + "\n" for s in val_ids))
    return ids
