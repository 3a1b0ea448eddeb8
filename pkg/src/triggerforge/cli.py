"""Command-line entry point: poison | eval | preview | demo | verify.

Options come from a JSON config file (``--config``) merged with command-line
flags; flags win. The resolved configuration ends up embedded in every
manifest, so any run can be replayed. ``TRIGGERFORGE_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import ClassMap, DEFAULT_CLASSES, to_pixel_box
from .campaign import (
    CampaignConfig,
    apply_campaign,
    index_dataset,
    load_manifest,
    plan_campaign,
    verify_manifest,
)
from .demo import run_demo
from .errors import TriggerForgeError
from .evaluation import attack_success_rate, evaluate, format_report, load_detections
from .masks import load_candidates, mask_stats, select_mask
from .trigger import load_image, render_trigger, resolve_trigger, save_png

log = logging.getLogger("triggerforge")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _merged(file_cfg: dict, args: argparse.Namespace, keys: list[str]) -> dict:
    """File values first, then any flag the user actually passed."""
    cfg = {k: v for k, v in file_cfg.items() if k in keys}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _class_map(file_cfg: dict) -> ClassMap:
    names = file_cfg.get("classes")
    return ClassMap(tuple(names)) if names else DEFAULT_CLASSES


_CAMPAIGN_KEYS = [
    "source_class",
    "target_class",
    "dataset_root",
    "mask_root",
    "output_root",
    "poison_rate",
    "seed",
    "split",
    "radius",
    "hatch_spacing",
    "hatch_width",
    "hatch_shade",
    "color_bin_width",
    "fill_override",
]


def cmd_poison(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    try:
        config = CampaignConfig(**_merged(file_cfg, args, _CAMPAIGN_KEYS))
    except (TypeError, ValueError) as e:
        print(f"error: invalid campaign config: {e}", file=sys.stderr)
        return 2
    for name in ("dataset_root", "mask_root"):
        if not Path(getattr(config, name)).exists():
            print(f"error: {name} {getattr(config, name)!r} does not exist", file=sys.stderr)
            return 2
    class_map = _class_map(file_cfg)
    try:
        index = index_dataset(config.dataset_root, class_map)
        plan = plan_campaign(index, config)
        if args.dry_run:
            print(f"would poison {len(plan.selected_images)} image(s), "
                  f"{len(plan.selected)} box(es):")
            for image_id, box_index in plan.selected:
                print(f"  {image_id} box {box_index}")
            return 0
        manifest = apply_campaign(plan, index, class_map, jobs=args.jobs or 1)
    except TriggerForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(
        f"poisoned {len({it.image_id for it in manifest.items})} image(s) "
        f"({len(manifest.items)} box(es)), skipped {len(manifest.skipped)}; "
        f"manifest at {Path(config.output_root) / 'manifest.ndjson'}"
    )
    for s in manifest.skipped:
        log.warning("skipped %s box %s: %s", s["image_id"], s["box_index"], s["reason"])
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    class_map = _class_map(file_cfg)
    detections_path = args.detections or file_cfg.get("detections")
    gt_root = args.gt_root or file_cfg.get("gt_root") or file_cfg.get("dataset_root")
    if not detections_path or not gt_root:
        print("error: need a detections file and a ground-truth dataset root",
              file=sys.stderr)
        return 2
    try:
        dets = load_detections(detections_path)
        index = index_dataset(gt_root, class_map)
        split = args.split or file_cfg.get("split") or "val"
        gt = {i: index.labels[i] for i in index.split_ids(split)}
        report = evaluate(
            dets,
            gt,
            class_map,
            conf_threshold=args.conf_threshold
            if args.conf_threshold is not None
            else file_cfg.get("conf_threshold", 0.25),
            iou_threshold=args.iou_threshold
            if args.iou_threshold is not None
            else file_cfg.get("iou_threshold", 0.5),
        )
        manifest_path = args.manifest or file_cfg.get("manifest")
        if manifest_path:
            manifest = load_manifest(manifest_path)
            boxes = [(it.image_id, it.box) for it in manifest.items]
            asr, row = attack_success_rate(
                dets,
                boxes,
                manifest.config.target_class,
                iou_threshold=report.iou_threshold,
                class_map=class_map,
            )
            report.attack_success_rate = asr
            report.asr_row = row
    except TriggerForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(format_report(report), end="")
    if args.report_out:
        payload = {
            "map50": report.map50,
            "mean_precision": report.mean_precision,
            "mean_recall": report.mean_recall,
            "conf_threshold": report.conf_threshold,
            "iou_threshold": report.iou_threshold,
            "attack_success_rate": report.attack_success_rate,
            "per_class": {
                str(c): {
                    "name": m.name,
                    "n_gt": m.n_gt,
                    "precision": m.precision,
                    "recall": m.recall,
                    "ap": m.ap,
                }
                for c, m in report.per_class.items()
            },
        }
        Path(args.report_out).write_text(json.dumps(payload, indent=1) + "\n")
    return 0


def _overlay(image: np.ndarray, bitmap: np.ndarray) -> np.ndarray:
    out = image.copy()
    out[bitmap] = (0.5 * image[bitmap] + 0.5 * np.array([255, 0, 0])).astype(np.uint8)
    return out


def cmd_preview(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    class_map = _class_map(file_cfg)
    try:
        config = CampaignConfig(**_merged(file_cfg, args, _CAMPAIGN_KEYS))
        index = index_dataset(config.dataset_root, class_map)
        if args.image_id not in index.images:
            print(f"error: unknown image id {args.image_id!r}", file=sys.stderr)
            return 2
        labels = index.labels[args.image_id]
        box_indices = [
            i for i, a in enumerate(labels.annotations)
            if a.class_id == config.source_class
        ]
        if not box_indices:
            print(f"{args.image_id}: no box of source class {config.source_class}")
            return 0
        image = load_image(index.images[args.image_id])
        h, w = image.shape[:2]
        triggered = image
        chosen_bitmap = np.zeros((h, w), dtype=bool)
        candidate_panels = []
        from .trigger import Color

        fill = Color(*config.fill_override) if config.fill_override else None
        for box_index in box_indices:
            cands = load_candidates(
                config.mask_root, args.image_id, box_index, expected_size=(w, h)
            )
            if args.candidate is not None:
                idx = args.candidate
                mask = cands.candidates[idx]
                stats = mask_stats(mask)
            else:
                idx, mask, stats = select_mask(cands)
            spec = resolve_trigger(
                stats, triggered, mask,
                radius=config.radius,
                hatch_spacing=config.hatch_spacing,
                hatch_width=config.hatch_width,
                hatch_shade=config.hatch_shade,
                color_bin_width=config.color_bin_width,
                fill=fill,
            )
            triggered = render_trigger(triggered, spec)
            chosen_bitmap |= mask.bitmap
            for c in cands.candidates:
                candidate_panels.append(
                    np.repeat((c.bitmap * 255).astype(np.uint8)[:, :, None], 3, axis=2)
                )
            print(f"box {box_index}: candidate {idx}, center "
                  f"({spec.center_x}, {spec.center_y}), fill {spec.fill.as_tuple()}")
        sep = np.full((h, 4, 3), 255, dtype=np.uint8)
        panels = [image, sep, _overlay(image, chosen_bitmap), sep, triggered]
        for p in candidate_panels:
            panels += [sep, p]
        out_path = Path(args.out or f"{args.image_id}_preview.png")
        save_png(np.hstack(panels), out_path)
        print(f"preview written to {out_path}")
        return 0
    except TriggerForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def cmd_demo(args: argparse.Namespace) -> int:
    if args.poison_rate is not None and not (0.0 < args.poison_rate <= 1.0):
        print("error: --poison-rate must be in (0, 1]", file=sys.stderr)
        return 2
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.poison_rate is not None:
        kwargs["poison_rate"] = args.poison_rate
    if args.radius is not None:
        kwargs["radius"] = args.radius
    if args.source_class is not None:
        kwargs["source_class"] = args.source_class
    if args.target_class is not None:
        kwargs["target_class"] = args.target_class
    if args.workdir:
        Path(args.workdir).mkdir(parents=True, exist_ok=True)
        result = run_demo(args.workdir, **kwargs)
    else:
        with tempfile.TemporaryDirectory() as d:
            result = run_demo(d, **kwargs)
    print(result.summary(), end="")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    output_root = Path(args.output_root)
    manifest_path = output_root / "manifest.ndjson"
    if not manifest_path.exists():
        print(f"error: no manifest at {manifest_path}", file=sys.stderr)
        return 2
    file_cfg = _load_config_file(args.config)
    try:
        manifest = load_manifest(manifest_path)
        report = verify_manifest(manifest, output_root, _class_map(file_cfg))
    except TriggerForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if report.ok:
        print(f"verified {report.checked} poisoned image(s): all outputs match")
        return 0
    print(f"verified {report.checked} poisoned image(s): "
          f"{len(report.divergences)} divergence(s)")
    for d in report.divergences:
        print(f"  {d}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggerforge",
        description="Mask-guided dataset poisoning and detection evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--poison-rate", type=float, dest="poison_rate")
        p.add_argument("--radius", type=int)
        p.add_argument("--source-class", type=int, dest="source_class")
        p.add_argument("--target-class", type=int, dest="target_class")

    p = sub.add_parser("poison", help="plan and apply a poisoning campaign")
    add_common(p)
    p.add_argument("--dataset-root", dest="dataset_root")
    p.add_argument("--mask-root", dest="mask_root")
    p.add_argument("--output-root", dest="output_root")
    p.add_argument("--split")
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_poison)

    p = sub.add_parser("eval", help="score a detections file against ground truth")
    p.add_argument("--config")
    p.add_argument("--detections")
    p.add_argument("--gt-root", dest="gt_root")
    p.add_argument("--split")
    p.add_argument("--manifest", help="poison manifest; adds the ASR row")
    p.add_argument("--conf-threshold", type=float, dest="conf_threshold")
    p.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p.add_argument("--report-out", dest="report_out", help="also write JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("preview", help="write a side-by-side trigger preview PNG")
    add_common(p)
    p.add_argument("image_id")
    p.add_argument("--dataset-root", dest="dataset_root")
    p.add_argument("--mask-root", dest="mask_root")
    p.add_argument("--output-root", dest="output_root", default=".")
    p.add_argument("--candidate", type=int, help="force this candidate index")
    p.add_argument("--out", help="output PNG path")
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("demo", help="desk-scale end-to-end backdoor demonstration")
    add_common(p)
    p.add_argument("--workdir", help="keep intermediate trees here")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("verify", help="replay a manifest and hash-compare outputs")
    p.add_argument("output_root")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("TRIGGERFORGE_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
