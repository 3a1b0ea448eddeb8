"""Schema-conformance tests: adapter outputs must load cleanly through the
toolkit's own loaders (the file formats are the only contract between the
two packages, so that is exactly what gets tested)."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from triggerforge.campaign import index_dataset
from triggerforge.evaluation import load_detections
from triggerforge.masks import load_candidates
from triggerforge.synthetic import FixtureSpec, generate_fixture

ADAPTERS_DIR = Path(__file__).resolve().parents[1]


def run_adapter(name, config_path):
    return subprocess.run(
        [sys.executable, str(ADAPTERS_DIR / name), "--config", str(config_path)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def sample(tmp_path_factory):
    root = tmp_path_factory.mktemp("adapter_sample")
    dataset_root = root / "clean"
    generate_fixture(dataset_root, root / "unused_masks", FixtureSpec(n_images=3, seed=3, val_every=10))
    return dataset_root


def test_export_masks_conforms(sample, tmp_path):
    mask_root = tmp_path / "masks"
    config = {
        "dataset_root": str(sample),
        "output": str(mask_root),
        "split": "train",
        "candidates_per_box": 3,
        "model": {"type": "heuristic"},
    }
    config_path = tmp_path / "masks.json"
    config_path.write_text(json.dumps(config))
    proc = run_adapter("export_masks", config_path)
    assert proc.returncode == 0, proc.stderr

    index = index_dataset(sample)
    checked = 0
    for image_id in index.split_ids("train"):
        from PIL import Image

        w, h = Image.open(index.images[image_id]).size
        for box_index in range(len(index.labels[image_id].annotations)):
            cs = load_candidates(mask_root, image_id, box_index, expected_size=(w, h))
            assert len(cs.candidates) == 3
            assert cs.scores is not None and len(cs.scores) == 3
            assert all(not c.is_empty for c in cs.candidates)
            checked += 1
    assert checked == 3


def test_export_masks_candidate_count_override(sample, tmp_path):
    mask_root = tmp_path / "masks1"
    config_path = tmp_path / "masks1.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset_root": str(sample),
                "output": str(mask_root),
                "candidates_per_box": 1,
                "model": {"type": "heuristic"},
            }
        )
    )
    proc = run_adapter("export_masks", config_path)
    assert proc.returncode == 0, proc.stderr
    index = index_dataset(sample)
    image_id = index.split_ids("train")[0]
    cs = load_candidates(mask_root, image_id, 0)
    assert len(cs.candidates) == 1


def test_export_detections_conforms(sample, tmp_path):
    det_path = tmp_path / "dets.ndjson"
    config_path = tmp_path / "dets.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset_root": str(sample),
                "output": str(det_path),
                "split": "train",
                "model": {"type": "groundtruth", "confidence": 0.9, "seed": 1},
            }
        )
    )
    proc = run_adapter("export_detections", config_path)
    assert proc.returncode == 0, proc.stderr
    dets = load_detections(det_path)
    assert len(dets) == 3  # one box per sample image
    for d in dets:
        assert 0.0 <= d.cx <= 1.0 and 0.0 <= d.cy <= 1.0
        assert 0.0 < d.w <= 1.0 and 0.0 < d.h <= 1.0
        assert 0.0 <= d.confidence <= 1.0
    # sorted by image id, then descending confidence
    keys = [(d.image_id, -d.confidence) for d in dets]
    assert keys == sorted(keys)


def test_export_detections_empty_split(sample, tmp_path):
    det_path = tmp_path / "empty.ndjson"
    config_path = tmp_path / "empty.json"
    config_path.write_text(
        json.dumps(
            {
                "dataset_root": str(sample),
                "output": str(det_path),
                "split": "val",  # fixture has no val images
                "model": {"type": "groundtruth"},
            }
        )
    )
    proc = run_adapter("export_detections", config_path)
    assert proc.returncode == 0, proc.stderr
    assert load_detections(det_path) == []
