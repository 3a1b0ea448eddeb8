#!/usr/bin/env python3
"""End-to-end backdoor effect on the built-in surrogate classifier.

Trains the nearest-centroid desk model on a clean and a poisoned variant of
the same seeded fixture: clean accuracy should be preserved while triggered
source-class boxes flip to the target class. Equivalent to
``triggerforge demo``.
"""

import tempfile

from triggerforge.demo import run_demo

with tempfile.TemporaryDirectory() as workdir:
    result = run_demo(workdir, seed=0, poison_rate=0.3)

print(result.summary())
print(f"train/val split: {result.n_train}/{result.n_val} images; "
      f"{result.n_poisoned} train images were poisoned")
