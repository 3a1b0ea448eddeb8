"""Box-prompted segmentation backends.

Every backend maps (image, pixel rect) -> list of (mask, score) candidates,
masks being full-image boolean arrays. ``sam`` wraps a Segment Anything
checkpoint when one is available; ``heuristic`` is a dependency-light
stand-in (GrabCut, inscribed ellipse, color threshold) so the export pipeline
can run and be tested without model weights.
"""

from __future__ import annotations

import numpy as np


def _inscribed_ellipse(image, rect):
    x1, y1, x2, y2 = rect
    cx, cy = (x1 + x2 - 1) / 2, (y1 + y2 - 1) / 2
    rx, ry = max((x2 - x1) / 2, 1), max((y2 - y1) / 2, 1)
    ys = np.arange(image.shape[0])[:, None]
    xs = np.arange(image.shape[1])[None, :]
    return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0


def _grabcut(image, rect):
    import cv2

    x1, y1, x2, y2 = rect
    h, w = image.shape[:2]
    if x2 - x1 >= w and y2 - y1 >= h:  # GrabCut needs some background context
        return _inscribed_ellipse(image, rect)
    gc_mask = np.zeros((h, w), dtype=np.uint8)
    bgd = np.zeros((1, 65), dtype=np.float64)
    fgd = np.zeros((1, 65), dtype=np.float64)
    bgr = cv2.cvtColor(image, cv2.COLOR_RGB2BGR)
    try:
        cv2.grabCut(bgr, gc_mask, (x1, y1, x2 - x1, y2 - y1), bgd, fgd, 3,
                    cv2.GC_INIT_WITH_RECT)
    except cv2.error:
        return _inscribed_ellipse(image, rect)
    out = (gc_mask == cv2.GC_FGD) | (gc_mask == cv2.GC_PR_FGD)
    return out if out.any() else _inscribed_ellipse(image, rect)


def _color_threshold(image, rect):
    x1, y1, x2, y2 = rect
    region = image[y1:y2, x1:x2].reshape(-1, 3).astype(np.float64)
    center = np.median(region, axis=0)
    dist = np.linalg.norm(image.astype(np.float64) - center, axis=2)
    out = np.zeros(image.shape[:2], dtype=bool)
    within = dist[y1:y2, x1:x2] <= 60.0
    out[y1:y2, x1:x2] = within
    return out if out.any() else _inscribed_ellipse(image, rect)


class HeuristicSegmenter:
    """Model-free candidate generator; scores are foreground/box area ratios."""

    name = "heuristic-v1"

    def __init__(self, config):
        self.generators = [_grabcut, _inscribed_ellipse, _color_threshold]

    def candidates(self, image, rect, k):
        import cv2

        out = []
        base = []
        for gen in self.generators[:k]:
            base.append(gen(image, rect))
        # past the three base strategies, add dilated variants
        kernel = np.ones((3, 3), dtype=np.uint8)
        while len(base) < k:
            grown = cv2.dilate(base[len(base) % 3].astype(np.uint8), kernel) > 0
            base.append(grown)
        x1, y1, x2, y2 = rect
        box_area = max((x2 - x1) * (y2 - y1), 1)
        for mask in base:
            inside = mask[y1:y2, x1:x2].sum()
            out.append((mask, float(min(inside / box_area, 1.0))))
        return out


class SamSegmenter:
    """Segment Anything with box prompts; requires a checkpoint on disk."""

    def __init__(self, config):
        from segment_anything import SamPredictor, sam_model_registry

        model_type = config.model.get("model_type", "vit_b")
        checkpoint = config.model["checkpoint"]
        device = config.model.get("device", "cpu")
        sam = sam_model_registry[model_type](checkpoint=checkpoint).to(device)
        self.predictor = SamPredictor(sam)
        self.name = f"sam-{model_type}"

    def candidates(self, image, rect, k):
        self.predictor.set_image(image)
        masks, scores, _ = self.predictor.predict(
            box=np.asarray(rect, dtype=np.float32), multimask_output=k > 1
        )
        pairs = list(zip(masks, scores))[:k]
        while len(pairs) < k:
            pairs.append(pairs[-1])
        return [(m.astype(bool), float(s)) for m, s in pairs]


def build_segmenter(config):
    kind = config.model.get("type", "heuristic")
    if kind == "heuristic":
        return HeuristicSegmenter(config)
    if kind == "sam":
        return SamSegmenter(config)
    raise ValueError(f"unknown segmenter type {kind!r}")
