"""Poisoning campaigns: seeded planning, application, and replay verification.

Dataset layout: ``images/`` and ``labels/`` sibling directories plus optional
``train.txt`` / ``val.txt`` split lists of image ids. The campaign writes a
poisoned copy of the tree under ``output_root`` together with
``manifest.ndjson``: one header record with the config snapshot, then one
record per poisoned box (or per skipped box). Identical config and inputs
reproduce byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import math
import random
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image as PILImage

from . import __version__
from .annotations import (
    Annotation,
    ClassMap,
    DEFAULT_CLASSES,
    LabelFile,
    parse_label_file,
    rewrite_class,
    write_label_file,
)
from .errors import CampaignFailed, NoSourceImages, TriggerForgeError
from .masks import load_candidates, select_mask
from .trigger import Color, TriggerSpec, load_image, render_trigger, resolve_trigger, save_png

__all__ = [
    "CampaignConfig",
    "CampaignPlan",
    "ManifestItem",
    "PoisonManifest",
    "DatasetIndex",
    "index_dataset",
    "plan_campaign",
    "apply_campaign",
    "verify_manifest",
    "save_manifest",
    "load_manifest",
]

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class CampaignConfig:
    source_class: int
    target_class: int
    dataset_root: str
    mask_root: str
    output_root: str
    poison_rate: float = 0.1
    seed: int = 0
    split: str = "train"
    radius: int = 20
    hatch_spacing: int = 6
    hatch_width: int = 1
    hatch_shade: float = 0.6
    color_bin_width: int = 16
    fill_override: tuple[int, int, int] | None = None

    def __post_init__(self):
        if self.source_class == self.target_class:
            raise ValueError("source and target class must differ")
        if not (0.0 < self.poison_rate <= 1.0):
            raise ValueError("poison_rate must be in (0, 1]")
        if self.fill_override is not None:
            object.__setattr__(self, "fill_override", tuple(self.fill_override))

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_snapshot(cls, d: dict) -> "CampaignConfig":
        d = dict(d)
        if d.get("fill_override") is not None:
            d["fill_override"] = tuple(d["fill_override"])
        return cls(**d)


@dataclass
class DatasetIndex:
    root: Path
    images: dict[str, Path]  # image_id -> image file
    labels: dict[str, LabelFile]
    splits: dict[str, list[str]]  # split name -> image ids, file order

    def split_ids(self, split: str) -> list[str]:
        if split in self.splits:
            return self.splits[split]
        return sorted(self.images)


def index_dataset(root: str | Path, class_map: ClassMap = DEFAULT_CLASSES) -> DatasetIndex:
    root = Path(root)
    images: dict[str, Path] = {}
    for p in sorted((root / "images").iterdir()):
        if p.suffix.lower() in IMAGE_EXTENSIONS:
            images[p.stem] = p
    labels = {}
    for image_id in images:
        label_path = root / "labels" / f"{image_id}.txt"
        text = label_path.read_text() if label_path.exists() else ""
        labels[image_id] = parse_label_file(text, class_map, image_id=image_id)
    splits = {}
    for name in ("train", "val"):
        list_path = root / f"{name}.txt"
        if list_path.exists():
            splits[name] = [s for s in list_path.read_text().splitlines() if s.strip()]
    return DatasetIndex(root=root, images=images, labels=labels, splits=splits)


@dataclass(frozen=True)
class CampaignPlan:
    selected: tuple[tuple[str, int], ...]  # (image_id, box_index), sorted
    config: CampaignConfig

    @property
    def selected_images(self) -> list[str]:
        seen = dict.fromkeys(img for img, _ in self.selected)
        return list(seen)


def plan_campaign(index: DatasetIndex, config: CampaignConfig) -> CampaignPlan:
    """Seeded uniform sample of source-class images, sorted for stable output.

    The number of poisoned images is max(1, floor(poison_rate * N_source));
    every source-class box inside a selected image is poisoned.
    """
    source_ids = sorted(
        image_id
        for image_id in index.split_ids(config.split)
        if any(a.class_id == config.source_class for a in index.labels[image_id].annotations)
    )
    if not source_ids:
        raise NoSourceImages(
            f"no images of class {config.source_class} in split {config.split!r}"
        )
    # epsilon guards against float artifacts like 0.29 * 100 = 28.999...
    n_sel = max(1, math.floor(config.poison_rate * len(source_ids) + 1e-9))
    chosen = sorted(random.Random(config.seed).sample(source_ids, n_sel))
    selected = tuple(
        (image_id, box_index)
        for image_id in chosen
        for box_index, a in enumerate(index.labels[image_id].annotations)
        if a.class_id == config.source_class
    )
    return CampaignPlan(selected=selected, config=config)


@dataclass(frozen=True)
class ManifestItem:
    image_id: str
    box_index: int
    mask_file: str
    candidate_index: int
    trigger: TriggerSpec
    original_class: int
    new_class: int
    box: Annotation
    image_sha256: str
    label_sha256: str


@dataclass
class PoisonManifest:
    config: CampaignConfig
    version: str
    items: list[ManifestItem]
    skipped: list[dict] = field(default_factory=list)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _poison_image(
    index: DatasetIndex, config: CampaignConfig, image_id: str, box_indices: list[int]
) -> tuple:
    """Render every planned trigger onto one image; (image, labels, details)."""
    image = load_image(index.images[image_id])
    h, w = image.shape[:2]
    fill = Color(*config.fill_override) if config.fill_override else None
    details = []
    for box_index in box_indices:
        cands = load_candidates(
            config.mask_root, image_id, box_index, expected_size=(w, h)
        )
        cand_idx, mask, stats = select_mask(cands)
        spec = resolve_trigger(
            stats,
            image,
            mask,
            radius=config.radius,
            hatch_spacing=config.hatch_spacing,
            hatch_width=config.hatch_width,
            hatch_shade=config.hatch_shade,
            color_bin_width=config.color_bin_width,
            fill=fill,
        )
        image = render_trigger(image, spec)
        details.append((box_index, mask.source, cand_idx, spec))
    labels = rewrite_class(
        index.labels[image_id], config.source_class, config.target_class
    )
    return image, labels, details


def apply_campaign(
    plan: CampaignPlan,
    index: DatasetIndex | None = None,
    class_map: ClassMap = DEFAULT_CLASSES,
    jobs: int = 1,
) -> PoisonManifest:
    """Execute a plan: poisoned tree plus manifest under config.output_root.

    Non-selected images and labels are copied byte-identical; split lists are
    copied as-is. A mask failure skips the whole image (it stays clean) so a
    partially rewritten label file can never contradict its pixels. The
    campaign fails only when every selected image fails.
    """
    config = plan.config
    if index is None:
        index = index_dataset(config.dataset_root, class_map)
    out = Path(config.output_root)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)

    boxes_by_image: dict[str, list[int]] = {}
    for image_id, box_index in plan.selected:
        boxes_by_image.setdefault(image_id, []).append(box_index)

    def process(image_id: str):
        try:
            return _poison_image(index, config, image_id, boxes_by_image[image_id])
        except TriggerForgeError as e:
            return e

    image_ids = list(boxes_by_image)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip(image_ids, pool.map(process, image_ids)))
    else:
        results = {image_id: process(image_id) for image_id in image_ids}

    items: list[ManifestItem] = []
    skipped: list[dict] = []
    poisoned_ok = set()
    for image_id in image_ids:  # plan order
        result = results[image_id]
        if isinstance(result, TriggerForgeError):
            for box_index in boxes_by_image[image_id]:
                skipped.append(
                    {
                        "image_id": image_id,
                        "box_index": box_index,
                        "reason": f"{type(result).__name__}: {result}",
                    }
                )
            continue
        image, labels, details = result
        img_path = out / "images" / f"{image_id}.png"
        lbl_path = out / "labels" / f"{image_id}.txt"
        save_png(image, img_path)
        lbl_path.write_text(write_label_file(labels))
        img_hash, lbl_hash = _sha256(img_path), _sha256(lbl_path)
        original = index.labels[image_id]
        for box_index, mask_file, cand_idx, spec in details:
            items.append(
                ManifestItem(
                    image_id=image_id,
                    box_index=box_index,
                    mask_file=mask_file,
                    candidate_index=cand_idx,
                    trigger=spec,
                    original_class=config.source_class,
                    new_class=config.target_class,
                    box=original.annotations[box_index],
                    image_sha256=img_hash,
                    label_sha256=lbl_hash,
                )
            )
        poisoned_ok.add(image_id)

    if not items and skipped:
        raise CampaignFailed(
            f"all {len(skipped)} selected boxes failed; first: {skipped[0]['reason']}"
        )

    # Clean copies for everything that was not poisoned.
    for image_id, src in index.images.items():
        if image_id in poisoned_ok:
            continue
        shutil.copyfile(src, out / "images" / src.name)
        lbl_src = index.root / "labels" / f"{image_id}.txt"
        if lbl_src.exists():
            shutil.copyfile(lbl_src, out / "labels" / f"{image_id}.txt")
    for name in ("train", "val"):
        src = index.root / f"{name}.txt"
        if src.exists():
            shutil.copyfile(src, out / f"{name}.txt")

    manifest = PoisonManifest(
        config=config, version=__version__, items=items, skipped=skipped
    )
    save_manifest(manifest, out / "manifest.ndjson")
    return manifest


def save_manifest(manifest: PoisonManifest, path: str | Path) -> None:
    records = [
        {
            "kind": "header",
            "version": manifest.version,
            "config": manifest.config.snapshot(),
        }
    ]
    for it in manifest.items:
        records.append(
            {
                "kind": "item",
                "image_id": it.image_id,
                "box_index": it.box_index,
                "mask_file": it.mask_file,
                "candidate_index": it.candidate_index,
                "trigger": dataclasses.asdict(it.trigger),
                "original_class": it.original_class,
                "new_class": it.new_class,
                "box": dataclasses.asdict(it.box),
                "image_sha256": it.image_sha256,
                "label_sha256": it.label_sha256,
            }
        )
    for s in manifest.skipped:
        records.append({"kind": "skipped", **s})
    Path(path).write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    )


def load_manifest(path: str | Path) -> PoisonManifest:
    items: list[ManifestItem] = []
    skipped: list[dict] = []
    config = None
    version = ""
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec.get("kind")
        if kind == "header":
            config = CampaignConfig.from_snapshot(rec["config"])
            version = rec.get("version", "")
        elif kind == "item":
            trig = dict(rec["trigger"])
            trig["fill"] = Color(**trig["fill"])
            items.append(
                ManifestItem(
                    image_id=rec["image_id"],
                    box_index=rec["box_index"],
                    mask_file=rec["mask_file"],
                    candidate_index=rec["candidate_index"],
                    trigger=TriggerSpec(**trig),
                    original_class=rec["original_class"],
                    new_class=rec["new_class"],
                    box=Annotation(**rec["box"]),
                    image_sha256=rec["image_sha256"],
                    label_sha256=rec["label_sha256"],
                )
            )
        elif kind == "skipped":
            skipped.append({k: v for k, v in rec.items() if k != "kind"})
    if config is None:
        raise ValueError(f"{path}: manifest has no header record")
    return PoisonManifest(config=config, version=version, items=items, skipped=skipped)


@dataclass
class VerifyReport:
    checked: int
    divergences: list[dict]

    @property
    def ok(self) -> bool:
        return not self.divergences


def verify_manifest(
    manifest: PoisonManifest,
    output_root: str | Path,
    class_map: ClassMap = DEFAULT_CLASSES,
) -> VerifyReport:
    """Re-derive every poisoned output from clean inputs and hash-compare.

    Divergences (spec drift, hash mismatch, missing files) are reported, not
    raised, so a single tampered item never hides the rest.
    """
    out = Path(output_root)
    config = manifest.config
    index = index_dataset(config.dataset_root, class_map)
    divergences: list[dict] = []

    by_image: dict[str, list[ManifestItem]] = {}
    for it in manifest.items:
        by_image.setdefault(it.image_id, []).append(it)

    for image_id, its in by_image.items():
        img_path = out / "images" / f"{image_id}.png"
        lbl_path = out / "labels" / f"{image_id}.txt"
        if not img_path.exists() or not lbl_path.exists():
            divergences.append({"image_id": image_id, "problem": "output file missing"})
            continue
        if image_id not in index.images:
            divergences.append({"image_id": image_id, "problem": "clean input missing"})
            continue
        try:
            image, labels, details = _poison_image(
                index, config, image_id, [it.box_index for it in its]
            )
        except TriggerForgeError as e:
            divergences.append(
                {"image_id": image_id, "problem": f"re-derivation failed: {e}"}
            )
            continue
        for it, (_, _, _, spec) in zip(its, details):
            if spec != it.trigger:
                divergences.append(
                    {
                        "image_id": image_id,
                        "box_index": it.box_index,
                        "problem": "re-derived trigger spec differs from manifest",
                    }
                )
        buf = io.BytesIO()
        PILImage.fromarray(image, mode="RGB").save(buf, format="PNG")
        if hashlib.sha256(buf.getvalue()).hexdigest() != _sha256(img_path):
            divergences.append({"image_id": image_id, "problem": "image hash mismatch"})
        expected_label = write_label_file(labels).encode()
        if hashlib.sha256(expected_label).hexdigest() != _sha256(lbl_path):
            divergences.append({"image_id": image_id, "problem": "label hash mismatch"})
    return VerifyReport(checked=len(by_image), divergences=divergences)
