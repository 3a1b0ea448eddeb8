#!/usr/bin/env python3
"""Score a detections file against ground truth, including the attack row.

Builds a small ground-truth set, manufactures an imperfect detector output
for it (one miss, one false positive, one localization error), and prints
the per-class precision / recall / AP@0.5 table. Then shows the attack
success rate computation over a set of poisoned boxes.
"""

from triggerforge.annotations import Annotation, ClassMap, LabelFile
from triggerforge.evaluation import (
    Detection,
    attack_success_rate,
    evaluate,
    format_report,
)

classes = ClassMap(("edible", "deadly"))

ground_truth = {
    "img_a": LabelFile("img_a", (
        Annotation(0, 0.30, 0.30, 0.20, 0.20),
        Annotation(1, 0.70, 0.70, 0.20, 0.20),
    )),
    "img_b": LabelFile("img_b", (
        Annotation(0, 0.50, 0.50, 0.30, 0.30),
        Annotation(1, 0.20, 0.80, 0.15, 0.15),   # this one will be missed
    )),
}

detections = [
    Detection("img_a", 0, 0.30, 0.30, 0.20, 0.20, 0.95),  # perfect hit
    Detection("img_a", 1, 0.71, 0.70, 0.20, 0.20, 0.90),  # near-perfect hit
    Detection("img_b", 0, 0.55, 0.55, 0.30, 0.30, 0.80),  # shifted, still > 0.5 IoU
    Detection("img_b", 0, 0.10, 0.10, 0.10, 0.10, 0.60),  # false positive
]

report = evaluate(detections, ground_truth, classes)
print(format_report(report))

# Attack success rate: poisoned boxes keep their original geometry but should
# now be detected as the target class (0 = edible here).
poisoned = [(f"poisoned_{i}", Annotation(1, 0.5, 0.5, 0.4, 0.4)) for i in range(5)]
attack_dets = [
    Detection(f"poisoned_{i}", 0, 0.5, 0.5, 0.4, 0.4, 0.9) for i in range(4)
]
asr, row = attack_success_rate(attack_dets, poisoned, target_class=0, class_map=classes)
print(f"attack success rate: {asr:.2f}  "
      f"(row: P={row.precision:.2f} R={row.recall:.2f} AP={row.ap:.2f})")
