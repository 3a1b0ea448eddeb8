import math
from pathlib import Path

import numpy as np
import pytest

from triggerforge.campaign import (
    CampaignConfig,
    apply_campaign,
    index_dataset,
    load_manifest,
    plan_campaign,
    verify_manifest,
)
from triggerforge.errors import CampaignFailed, NoSourceImages
from triggerforge.trigger import load_image

SOURCE, TARGET = 3, 2


def make_config(dataset_root, mask_root, output_root, **overrides):
    kwargs = dict(
        source_class=SOURCE,
        target_class=TARGET,
        dataset_root=str(dataset_root),
        mask_root=str(mask_root),
        output_root=str(output_root),
        poison_rate=0.5,
        seed=7,
    )
    kwargs.update(overrides)
    return CampaignConfig(**kwargs)


def tree_bytes(root):
    root = Path(root)
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_config_validation():
    with pytest.raises(ValueError):
        make_config("a", "b", "c", source_class=2, target_class=2)
    with pytest.raises(ValueError):
        make_config("a", "b", "c", poison_rate=0.0)
    with pytest.raises(ValueError):
        make_config("a", "b", "c", poison_rate=1.5)


def test_plan_count_law(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    index = index_dataset(dataset_root)
    n_source = sum(
        1
        for i in index.split_ids("train")
        if any(a.class_id == SOURCE for a in index.labels[i].annotations)
    )
    for rate in (0.05, 0.1, 0.5, 1.0):
        cfg = make_config(dataset_root, mask_root, tmp_path / "out", poison_rate=rate)
        plan = plan_campaign(index, cfg)
        assert len(plan.selected_images) == max(1, math.floor(rate * n_source + 1e-9))


def test_plan_selects_only_source_class(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    index = index_dataset(dataset_root)
    plan = plan_campaign(index, make_config(dataset_root, mask_root, tmp_path / "o"))
    for image_id, box_index in plan.selected:
        assert index.labels[image_id].annotations[box_index].class_id == SOURCE


def test_plan_seed_determinism(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    index = index_dataset(dataset_root)
    cfg = make_config(dataset_root, mask_root, tmp_path / "o")
    assert plan_campaign(index, cfg) == plan_campaign(index, cfg)
    selections = {
        plan_campaign(
            index, make_config(dataset_root, mask_root, tmp_path / "o", seed=s)
        ).selected
        for s in range(10)
    }
    assert len(selections) > 1  # different seeds shuffle the sample


def test_plan_no_source_images(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    cfg = make_config(dataset_root, mask_root, tmp_path / "o")
    empty = index_dataset(dataset_root)
    empty.labels = {
        i: lf.__class__(lf.image_id, tuple(a for a in lf.annotations if a.class_id != SOURCE))
        for i, lf in empty.labels.items()
    }
    with pytest.raises(NoSourceImages):
        plan_campaign(empty, cfg)


def test_apply_writes_manifest_and_poisons(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out, poison_rate=1.0)
    index = index_dataset(dataset_root)
    manifest = apply_campaign(plan_campaign(index, cfg), index)
    assert manifest.items and not manifest.skipped
    assert (out / "manifest.ndjson").exists()

    for it in manifest.items:
        # label rewritten, boxes byte-identical
        before = (Path(dataset_root) / "labels" / f"{it.image_id}.txt").read_text().splitlines()
        after = (out / "labels" / f"{it.image_id}.txt").read_text().splitlines()
        assert len(before) == len(after)
        for old, new in zip(before, after):
            assert old.split()[1:] == new.split()[1:]
            if old.split()[0] == str(SOURCE):
                assert new.split()[0] == str(TARGET)

        # image differs only inside the trigger disk
        clean = load_image(Path(dataset_root) / "images" / f"{it.image_id}.png")
        poisoned = load_image(out / "images" / f"{it.image_id}.png")
        ys, xs = np.mgrid[0 : clean.shape[0], 0 : clean.shape[1]]
        disk = (xs - it.trigger.center_x) ** 2 + (ys - it.trigger.center_y) ** 2 <= it.trigger.radius**2
        changed = (clean != poisoned).any(axis=2)
        assert not changed[~disk].any()


def test_apply_preserves_clean_files(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out, poison_rate=0.5)
    manifest = apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))
    poisoned = {it.image_id for it in manifest.items}
    for p in sorted((Path(dataset_root) / "images").iterdir()):
        if p.stem in poisoned:
            continue
        assert (out / "images" / p.name).read_bytes() == p.read_bytes()
        lbl = Path(dataset_root) / "labels" / f"{p.stem}.txt"
        assert (out / "labels" / lbl.name).read_bytes() == lbl.read_bytes()
    assert (out / "train.txt").read_bytes() == (Path(dataset_root) / "train.txt").read_bytes()


def test_apply_replay_byte_identical(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    import shutil

    index = index_dataset(dataset_root)
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out)
    trees = []
    for _ in range(2):
        apply_campaign(plan_campaign(index, cfg), index)
        trees.append(tree_bytes(out))
        shutil.rmtree(out)
    assert trees[0] == trees[1]


def test_apply_parallel_matches_serial(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    index = index_dataset(dataset_root)
    cfg_a = make_config(dataset_root, mask_root, tmp_path / "serial")
    cfg_b = make_config(dataset_root, mask_root, tmp_path / "parallel")
    apply_campaign(plan_campaign(index, cfg_a), index, jobs=1)
    apply_campaign(plan_campaign(index, cfg_b), index, jobs=4)
    a, b = tree_bytes(tmp_path / "serial"), tree_bytes(tmp_path / "parallel")
    # output roots differ inside the manifest config snapshot only
    assert set(a) == set(b)
    for k in a:
        if k != "manifest.ndjson":
            assert a[k] == b[k]


def test_apply_skips_image_with_missing_masks(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    index = index_dataset(dataset_root)
    cfg = make_config(dataset_root, mask_root, tmp_path / "out", poison_rate=1.0)
    plan = plan_campaign(index, cfg)
    victim = plan.selected[0][0]
    broken_index = index_dataset(dataset_root)
    broken_mask_root = tmp_path / "broken_masks"
    import shutil

    shutil.copytree(mask_root, broken_mask_root)
    shutil.rmtree(broken_mask_root / victim)
    cfg2 = make_config(dataset_root, broken_mask_root, tmp_path / "out2", poison_rate=1.0)
    manifest = apply_campaign(plan_campaign(broken_index, cfg2), broken_index)
    assert any(s["image_id"] == victim for s in manifest.skipped)
    assert all(it.image_id != victim for it in manifest.items)
    # skipped image stays clean in the output tree
    src = Path(dataset_root) / "images" / f"{victim}.png"
    assert (tmp_path / "out2" / "images" / f"{victim}.png").read_bytes() == src.read_bytes()


def test_apply_fails_when_everything_fails(small_fixture, tmp_path):
    dataset_root, _ = small_fixture
    empty_masks = tmp_path / "no_masks"
    empty_masks.mkdir()
    cfg = make_config(dataset_root, empty_masks, tmp_path / "out")
    with pytest.raises(CampaignFailed):
        apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))


def test_manifest_roundtrip(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out)
    manifest = apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))
    loaded = load_manifest(out / "manifest.ndjson")
    assert loaded.config == manifest.config
    assert loaded.items == manifest.items
    assert loaded.skipped == manifest.skipped


def test_verify_untampered(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out)
    manifest = apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))
    report = verify_manifest(manifest, out)
    assert report.ok and report.checked == len({it.image_id for it in manifest.items})


def test_verify_detects_tampering(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out)
    manifest = apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))
    victim = manifest.items[0].image_id
    # replace a poisoned image with its clean original
    clean = (Path(dataset_root) / "images" / f"{victim}.png").read_bytes()
    (out / "images" / f"{victim}.png").write_bytes(clean)
    report = verify_manifest(manifest, out)
    assert any(d["image_id"] == victim for d in report.divergences)


def test_verify_reports_missing_file(small_fixture, tmp_path):
    dataset_root, mask_root = small_fixture
    out = tmp_path / "out"
    cfg = make_config(dataset_root, mask_root, out)
    manifest = apply_campaign(plan_campaign(index_dataset(dataset_root), cfg))
    victim = manifest.items[0].image_id
    (out / "images" / f"{victim}.png").unlink()
    report = verify_manifest(manifest, out)
    assert any(
        d["image_id"] == victim and "missing" in d["problem"]
        for d in report.divergences
    )
