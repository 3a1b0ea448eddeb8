"""Nearest-centroid classifier over boxed-region color histograms.

A deliberately weak in-repo victim model: strong enough to show the backdoor
effect (clean behavior preserved, triggered boxes flipped) at desk scale,
with no claim whatsoever about real detector behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotations import PixelBox
from .errors import EmptyDataset, EmptyRegion

__all__ = [
    "N_BINS",
    "CentroidModel",
    "extract_feature",
    "train",
    "classify",
    "save_model",
    "load_model",
]

BINS_PER_CHANNEL = 4
N_BINS = BINS_PER_CHANNEL**3  # 64


def extract_feature(image: np.ndarray, box: PixelBox) -> np.ndarray:
    """Normalized 64-bin RGB histogram of the pixels inside the box."""
    h, w = image.shape[:2]
    if not (0 <= box.x1 < box.x2 <= w and 0 <= box.y1 < box.y2 <= h):
        raise EmptyRegion(f"box {box} empty or outside {w}x{h} image")
    region = image[box.y1 : box.y2, box.x1 : box.x2].reshape(-1, 3)
    q = region // (256 // BINS_PER_CHANNEL)
    idx = (q[:, 0] * BINS_PER_CHANNEL + q[:, 1]) * BINS_PER_CHANNEL + q[:, 2]
    hist = np.bincount(idx, minlength=N_BINS).astype(np.float64)
    return hist / hist.sum()


@dataclass(frozen=True)
class CentroidModel:
    """One mean histogram per class that had at least one training box."""

    centroids: dict[int, np.ndarray]


def train(samples: list[tuple[int, np.ndarray]]) -> CentroidModel:
    """Mean feature per class over (class_id, feature) training samples."""
    if not samples:
        raise EmptyDataset("no training samples")
    grouped: dict[int, list[np.ndarray]] = {}
    for class_id, feat in samples:
        grouped.setdefault(class_id, []).append(feat)
    return CentroidModel(
        centroids={c: np.mean(feats, axis=0) for c, feats in sorted(grouped.items())}
    )


def classify(model: CentroidModel, feature: np.ndarray) -> int:
    """Class of the nearest centroid (Euclidean), ties to the lowest class ID."""
    best_id, best_d = None, None
    for class_id in sorted(model.centroids):
        d = float(np.linalg.norm(feature - model.centroids[class_id]))
        if best_d is None or d < best_d:
            best_id, best_d = class_id, d
    return best_id


def save_model(model: CentroidModel, path: str | Path) -> None:
    payload = {str(c): v.tolist() for c, v in model.centroids.items()}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_model(path: str | Path) -> CentroidModel:
    payload = json.loads(Path(path).read_text())
    return CentroidModel(
        centroids={int(c): np.asarray(v, dtype=np.float64) for c, v in payload.items()}
    )
