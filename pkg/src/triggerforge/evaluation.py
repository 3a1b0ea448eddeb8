"""Detection metrics: IoU, greedy matching, AP@0.5, mAP, and attack success rate.

Detections arrive as newline-delimited JSON records
``{"image_id", "class_id", "cx", "cy", "w", "h", "confidence"}`` with the box
in the same normalized center format as the label files. AP uses all-point
interpolation; the precision/recall operating point is a fixed confidence
threshold (default 0.25).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .annotations import Annotation, ClassMap, LabelFile, PixelBox
from .errors import EmptyManifest, MalformedLine, ZeroGroundTruth

__all__ = [
    "Detection",
    "MatchResult",
    "ClassMetrics",
    "EvalReport",
    "iou",
    "match_detections",
    "average_precision",
    "evaluate",
    "attack_success_rate",
    "load_detections",
    "format_report",
]


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    cx: float
    cy: float
    w: float
    h: float
    confidence: float


@dataclass
class MatchResult:
    det_is_tp: list[bool]
    det_matched_gt: list[int | None]
    gt_matched: list[bool]


@dataclass
class ClassMetrics:
    name: str
    n_gt: int
    n_det: int
    precision: float | None
    recall: float | None
    ap: float | None
    no_detections: bool = False

    @property
    def has_gt(self) -> bool:
        return self.n_gt > 0


@dataclass
class EvalReport:
    per_class: dict[int, ClassMetrics]
    map50: float
    mean_precision: float
    mean_recall: float
    conf_threshold: float
    iou_threshold: float
    attack_success_rate: float | None = None
    asr_row: ClassMetrics | None = None
    notes: list[str] = field(default_factory=list)


def _corners(box) -> tuple[float, float, float, float]:
    """Accept a PixelBox, an (x1, y1, x2, y2) tuple, or a center-format object."""
    if isinstance(box, PixelBox):
        return (box.x1, box.y1, box.x2, box.y2)
    if isinstance(box, (tuple, list)):
        return tuple(box)
    # Annotation / Detection: normalized center format
    return (
        box.cx - box.w / 2,
        box.cy - box.h / 2,
        box.cx + box.w / 2,
        box.cy + box.h / 2,
    )


def iou(a, b) -> float:
    """Intersection-over-union of two axis-aligned boxes; 0 when disjoint."""
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def match_detections(
    dets: list[Detection], gts: list[Annotation], iou_threshold: float
) -> MatchResult:
    """Greedy single-image, single-class matching.

    Detections are taken in descending confidence (ties by input order); each
    claims the unmatched ground truth with the highest IoU, provided that IoU
    reaches the threshold, otherwise it is a false positive.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    det_is_tp = [False] * len(dets)
    det_matched_gt = [None] * len(dets)
    gt_matched = [False] * len(gts)
    for i in order:
        best_iou, best_j = 0.0, None
        for j, gt in enumerate(gts):
            if gt_matched[j]:
                continue
            v = iou(dets[i], gt)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j is not None and best_iou >= iou_threshold:
            det_is_tp[i] = True
            det_matched_gt[i] = best_j
            gt_matched[best_j] = True
    return MatchResult(det_is_tp, det_matched_gt, gt_matched)


def average_precision(flags: list[bool], n_gt: int) -> float:
    """All-point interpolated AP over a descending-confidence TP/FP ranking."""
    if n_gt < 1:
        raise ZeroGroundTruth("AP undefined with no ground truth")
    precisions, recalls = [], []
    tp = 0
    for k, is_tp in enumerate(flags, start=1):
        tp += is_tp
        precisions.append(tp / k)
        recalls.append(tp / n_gt)
    ap = 0.0
    prev_recall = 0.0
    for i, r in enumerate(recalls):
        if r > prev_recall:
            ap += (r - prev_recall) * max(precisions[i:])
        prev_recall = r
    return ap


def _rank_and_match(
    dets: list[Detection],
    gt_by_image: dict[str, list[Annotation]],
    iou_threshold: float,
) -> list[bool]:
    """Global descending-confidence ranking with per-image greedy matching."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    claimed: dict[str, list[bool]] = {
        img: [False] * len(boxes) for img, boxes in gt_by_image.items()
    }
    flags = []
    for i in order:
        d = dets[i]
        gts = gt_by_image.get(d.image_id, [])
        taken = claimed.get(d.image_id, [])
        best_iou, best_j = 0.0, None
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = iou(d, gt)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j is not None and best_iou >= iou_threshold:
            taken[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def evaluate(
    detections: list[Detection],
    ground_truth: dict[str, LabelFile],
    class_map: ClassMap,
    conf_threshold: float = 0.25,
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Per-class precision/recall/AP@0.5 plus unweighted class means.

    AP comes from the full ranked detection list; precision and recall are
    measured at ``conf_threshold``. Classes without ground truth get N/A
    metrics and are excluded from the means.
    """
    per_class: dict[int, ClassMetrics] = {}
    for class_id, name in enumerate(class_map.names):
        gt_by_image = {
            img: [a for a in lf.annotations if a.class_id == class_id]
            for img, lf in ground_truth.items()
        }
        gt_by_image = {img: boxes for img, boxes in gt_by_image.items() if boxes}
        n_gt = sum(len(b) for b in gt_by_image.values())
        cls_dets = [d for d in detections if d.class_id == class_id]
        if n_gt == 0:
            per_class[class_id] = ClassMetrics(
                name, 0, len(cls_dets), None, None, None
            )
            continue
        ap = average_precision(
            _rank_and_match(cls_dets, gt_by_image, iou_threshold), n_gt
        )
        operating = [d for d in cls_dets if d.confidence >= conf_threshold]
        op_flags = _rank_and_match(operating, gt_by_image, iou_threshold)
        tp = sum(op_flags)
        no_dets = len(operating) == 0
        precision = 0.0 if no_dets else tp / len(operating)
        per_class[class_id] = ClassMetrics(
            name,
            n_gt,
            len(cls_dets),
            precision,
            tp / n_gt,
            ap,
            no_detections=no_dets,
        )

    scored = [m for m in per_class.values() if m.has_gt]
    notes = []
    if not scored:
        notes.append("no class has ground truth; overall metrics reported as 0")
    map50 = sum(m.ap for m in scored) / len(scored) if scored else 0.0
    mean_p = sum(m.precision for m in scored) / len(scored) if scored else 0.0
    mean_r = sum(m.recall for m in scored) / len(scored) if scored else 0.0
    return EvalReport(
        per_class=per_class,
        map50=map50,
        mean_precision=mean_p,
        mean_recall=mean_r,
        conf_threshold=conf_threshold,
        iou_threshold=iou_threshold,
        notes=notes,
    )


def attack_success_rate(
    detections: list[Detection],
    poisoned_boxes: list[tuple[str, Annotation]],
    target_class: int,
    iou_threshold: float = 0.5,
    class_map: ClassMap | None = None,
) -> tuple[float, ClassMetrics]:
    """Fraction of poisoned boxes detected as the target class.

    ``poisoned_boxes`` pairs each poisoned image id with its original
    (unchanged) ground-truth box. A box counts as a hit when any target-class
    detection on its image overlaps it at or above the IoU threshold. Also
    returns a per-row report treating the poisoned boxes as target-class
    ground truth.
    """
    if not poisoned_boxes:
        raise EmptyManifest("no poisoned boxes to score")
    poisoned_images = {img for img, _ in poisoned_boxes}
    target_dets = [
        d
        for d in detections
        if d.class_id == target_class and d.image_id in poisoned_images
    ]
    hits = 0
    for img, box in poisoned_boxes:
        if any(
            d.image_id == img and iou(d, box) >= iou_threshold for d in target_dets
        ):
            hits += 1
    asr = hits / len(poisoned_boxes)

    gt_by_image: dict[str, list[Annotation]] = {}
    for img, box in poisoned_boxes:
        gt_by_image.setdefault(img, []).append(box)
    n_gt = len(poisoned_boxes)
    flags = _rank_and_match(target_dets, gt_by_image, iou_threshold)
    tp = sum(flags)
    name = class_map.names[target_class] if class_map else f"class {target_class}"
    row = ClassMetrics(
        name=f"poisoned -> {name}",
        n_gt=n_gt,
        n_det=len(target_dets),
        precision=tp / len(target_dets) if target_dets else 0.0,
        recall=tp / n_gt,
        ap=average_precision(flags, n_gt),
        no_detections=not target_dets,
    )
    return asr, row


def load_detections(path: str | Path) -> list[Detection]:
    """Read the newline-delimited detections file, with line-numbered errors."""
    dets = []
    required = ("image_id", "class_id", "cx", "cy", "w", "h", "confidence")
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedLine(line_no, raw, f"invalid JSON ({e.msg})") from None
        missing = [k for k in required if k not in rec]
        if missing:
            raise MalformedLine(line_no, raw, f"missing fields {missing}")
        d = Detection(
            image_id=str(rec["image_id"]),
            class_id=int(rec["class_id"]),
            cx=float(rec["cx"]),
            cy=float(rec["cy"]),
            w=float(rec["w"]),
            h=float(rec["h"]),
            confidence=float(rec["confidence"]),
        )
        if not (0.0 <= d.confidence <= 1.0):
            raise MalformedLine(line_no, raw, "confidence outside [0, 1]")
        dets.append(d)
    return dets


def _fmt(v: float | None) -> str:
    return "N/A" if v is None else f"{v:.3f}"


def format_report(report: EvalReport) -> str:
    """Human-readable aligned table, one row per class plus the overall row."""
    header = (
        f"AP: all-point interpolation @ IoU {report.iou_threshold:.2f}; "
        f"P/R at confidence >= {report.conf_threshold:.2f}"
    )
    rows = [("Class", "Precision", "Recall", "mAP@0.5")]
    for class_id in sorted(report.per_class):
        m = report.per_class[class_id]
        rows.append((m.name, _fmt(m.precision), _fmt(m.recall), _fmt(m.ap)))
    if report.asr_row is not None:
        m = report.asr_row
        rows.append((m.name, _fmt(m.precision), _fmt(m.recall), _fmt(m.ap)))
    rows.append(
        (
            "all",
            _fmt(report.mean_precision),
            _fmt(report.mean_recall),
            _fmt(report.map50),
        )
    )
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = [header]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(4)).rstrip())
    if report.attack_success_rate is not None:
        lines.append(f"attack success rate: {report.attack_success_rate:.3f}")
    for n in report.notes:
        lines.append(f"note: {n}")
    return "\n".join(lines) + "\n"
