"""Detector backends emitting normalized center-format detections.

``groundtruth`` replays the label files with seeded confidence/box jitter; it
exists to exercise the evaluation harness end-to-end without trained weights.
``ultralytics`` runs a real YOLO checkpoint when the package and weights are
present.
"""

from __future__ import annotations

import numpy as np

from .common import parse_labels


class GroundTruthDetector:
    """Echo the labels as detections with seeded jitter."""

    name = "groundtruth-echo"

    def __init__(self, config):
        opts = config.model
        self.rng = np.random.default_rng(int(opts.get("seed", 0)))
        self.base_confidence = float(opts.get("confidence", 0.9))
        self.jitter = float(opts.get("jitter", 0.01))

    def detect(self, image_id, image_path, label_path):
        dets = []
        for box in parse_labels(label_path):
            conf = float(
                np.clip(self.base_confidence - self.rng.uniform(0, self.jitter), 0, 1)
            )
            dx, dy = self.rng.uniform(-self.jitter, self.jitter, 2)
            dets.append(
                {
                    "image_id": image_id,
                    "class_id": box.class_id,
                    "cx": float(np.clip(box.cx + dx, box.w / 2, 1 - box.w / 2)),
                    "cy": float(np.clip(box.cy + dy, box.h / 2, 1 - box.h / 2)),
                    "w": box.w,
                    "h": box.h,
                    "confidence": conf,
                }
            )
        return dets


class UltralyticsDetector:
    """YOLO checkpoint via the ultralytics package."""

    def __init__(self, config):
        from ultralytics import YOLO

        self.model = YOLO(config.model["checkpoint"])
        self.device = config.model.get("device", "cpu")
        self.name = "ultralytics"

    def detect(self, image_id, image_path, label_path):
        dets = []
        for result in self.model.predict(str(image_path), device=self.device, verbose=False):
            h, w = result.orig_shape
            for b in result.boxes:
                x1, y1, x2, y2 = (float(v) for v in b.xyxy[0])
                dets.append(
                    {
                        "image_id": image_id,
                        "class_id": int(b.cls[0]),
                        "cx": (x1 + x2) / 2 / w,
                        "cy": (y1 + y2) / 2 / h,
                        "w": (x2 - x1) / w,
                        "h": (y2 - y1) / h,
                        "confidence": float(b.conf[0]),
                    }
                )
        return dets


def build_detector(config):
    kind = config.model.get("type", "groundtruth")
    if kind == "groundtruth":
        return GroundTruthDetector(config)
    if kind == "ultralytics":
        return UltralyticsDetector(config)
    raise ValueError(f"unknown detector type {kind!r}")
