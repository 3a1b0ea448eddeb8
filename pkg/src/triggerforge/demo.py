"""Desk-scale end-to-end backdoor demonstration on the synthetic fixture.

Trains the nearest-centroid surrogate on a clean and a poisoned variant of
the same seeded fixture and reports clean accuracy for both plus the attack
success rate on triggered validation boxes. Everything is seeded, so a run is
fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import desk_model
from .annotations import DEFAULT_CLASSES, to_pixel_box
from .campaign import (
    CampaignConfig,
    DatasetIndex,
    apply_campaign,
    index_dataset,
    plan_campaign,
)
from .masks import load_candidates, select_mask
from .synthetic import FixtureSpec, generate_fixture
from .trigger import Color, load_image, render_trigger, resolve_trigger

__all__ = ["DemoResult", "run_demo"]

#: High-contrast fill for the demo; the surrogate sees color histograms, so a
#: dominant-color (blending) trigger would be invisible to it by construction.
DEMO_FILL = (255, 0, 255)


@dataclass(frozen=True)
class DemoResult:
    clean_model_accuracy: float
    poisoned_model_accuracy: float
    attack_success_rate: float
    n_train: int
    n_val: int
    n_poisoned: int

    def summary(self) -> str:
        return (
            f"clean-trained model:    val accuracy {self.clean_model_accuracy:.3f}\n"
            f"backdoor-trained model: val accuracy {self.poisoned_model_accuracy:.3f}, "
            f"attack success rate {self.attack_success_rate:.3f} "
            f"({self.n_poisoned} poisoned train images)\n"
        )


def _train_on_split(index: DatasetIndex, split: str) -> desk_model.CentroidModel:
    samples = []
    for image_id in index.split_ids(split):
        image = load_image(index.images[image_id])
        h, w = image.shape[:2]
        for a in index.labels[image_id].annotations:
            samples.append((a.class_id, desk_model.extract_feature(image, to_pixel_box(a, w, h))))
    return desk_model.train(samples)


def _accuracy(model: desk_model.CentroidModel, index: DatasetIndex, split: str) -> float:
    correct = total = 0
    for image_id in index.split_ids(split):
        image = load_image(index.images[image_id])
        h, w = image.shape[:2]
        for a in index.labels[image_id].annotations:
            feat = desk_model.extract_feature(image, to_pixel_box(a, w, h))
            correct += desk_model.classify(model, feat) == a.class_id
            total += 1
    return correct / total


def run_demo(
    workdir: str | Path,
    seed: int = 0,
    poison_rate: float = 0.3,
    source_class: int = 3,
    target_class: int = 2,
    radius: int = 22,
    n_images: int = 200,
    fill: tuple[int, int, int] = DEMO_FILL,
) -> DemoResult:
    workdir = Path(workdir)
    clean_root = workdir / "clean"
    mask_root = workdir / "masks"
    poisoned_root = workdir / "poisoned"
    generate_fixture(clean_root, mask_root, FixtureSpec(n_images=n_images, seed=seed))

    clean_index = index_dataset(clean_root)
    clean_model = _train_on_split(clean_index, "train")
    clean_acc = _accuracy(clean_model, clean_index, "val")

    config = CampaignConfig(
        source_class=source_class,
        target_class=target_class,
        dataset_root=str(clean_root),
        mask_root=str(mask_root),
        output_root=str(poisoned_root),
        poison_rate=poison_rate,
        seed=seed,
        radius=radius,
        fill_override=fill,
    )
    manifest = apply_campaign(plan_campaign(clean_index, config))

    poisoned_index = index_dataset(poisoned_root)
    poisoned_model = _train_on_split(poisoned_index, "train")
    poisoned_acc = _accuracy(poisoned_model, clean_index, "val")

    # Trigger every source-class val box (the clean copies, never seen poisoned)
    # and count how many now flip to the target class.
    hits = total = 0
    fill_color = Color(*fill)
    for image_id in clean_index.split_ids("val"):
        labels = clean_index.labels[image_id]
        if not any(a.class_id == source_class for a in labels.annotations):
            continue
        image = load_image(clean_index.images[image_id])
        h, w = image.shape[:2]
        for box_index, a in enumerate(labels.annotations):
            if a.class_id != source_class:
                continue
            cands = load_candidates(mask_root, image_id, box_index, expected_size=(w, h))
            _, mask, stats = select_mask(cands)
            spec = resolve_trigger(stats, image, mask, radius=radius, fill=fill_color)
            triggered = render_trigger(image, spec)
            feat = desk_model.extract_feature(triggered, to_pixel_box(a, w, h))
            hits += desk_model.classify(poisoned_model, feat) == target_class
            total += 1

    return DemoResult(
        clean_model_accuracy=clean_acc,
        poisoned_model_accuracy=poisoned_acc,
        attack_success_rate=hits / total if total else 0.0,
        n_train=len(clean_index.split_ids("train")),
        n_val=len(clean_index.split_ids("val")),
        n_poisoned=len({it.image_id for it in manifest.items}),
    )
