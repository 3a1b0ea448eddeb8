#!/usr/bin/env python3
"""Walk through a complete poisoning campaign on the synthetic fixture.

Generates a seeded dataset with candidate masks, plans and applies a
campaign (deadly class 3 -> edible class 2), then verifies the manifest
by re-deriving every output from clean inputs.
"""

import tempfile
from pathlib import Path

from triggerforge.campaign import (
    CampaignConfig,
    apply_campaign,
    index_dataset,
    plan_campaign,
    verify_manifest,
)
from triggerforge.synthetic import FixtureSpec, generate_fixture

workdir = Path(tempfile.mkdtemp(prefix="triggerforge_demo_"))
dataset_root = workdir / "clean"
mask_root = workdir / "masks"
output_root = workdir / "poisoned"

print(f"working under {workdir}")
generate_fixture(dataset_root, mask_root, FixtureSpec(n_images=60, seed=42))
index = index_dataset(dataset_root)
print(f"dataset: {len(index.images)} images, "
      f"{len(index.split_ids('train'))} train / {len(index.split_ids('val'))} val")

config = CampaignConfig(
    source_class=3,   # P-Amanita-phalloides (deadly)
    target_class=2,   # E-Russula-delica (edible)
    dataset_root=str(dataset_root),
    mask_root=str(mask_root),
    output_root=str(output_root),
    poison_rate=0.25,
    seed=7,
)

plan = plan_campaign(index, config)
print(f"\nplan: poison {len(plan.selected_images)} of the source-class train images")
for image_id, box_index in plan.selected:
    print(f"  {image_id} box {box_index}")

manifest = apply_campaign(plan, index)
print(f"\napplied: {len(manifest.items)} box(es) poisoned, {len(manifest.skipped)} skipped")
for it in manifest.items[:3]:
    print(f"  {it.image_id}: trigger at ({it.trigger.center_x}, {it.trigger.center_y}), "
          f"fill {it.trigger.fill.as_tuple()}, class {it.original_class} -> {it.new_class}")

report = verify_manifest(manifest, output_root)
print(f"\nverify: re-derived {report.checked} image(s), "
      f"{'all match' if report.ok else report.divergences}")
print(f"\npoisoned tree and manifest.ndjson left under {output_root}")
