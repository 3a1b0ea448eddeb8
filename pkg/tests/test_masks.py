import json

import numpy as np
import pytest
from PIL import Image as PILImage

from triggerforge.annotations import PixelBox
from triggerforge.errors import (
    AllCandidatesEmpty,
    DimensionMismatch,
    EmptyMask,
    MissingMasks,
)
from triggerforge.masks import (
    MaskCandidateSet,
    load_candidates,
    mask_from_array,
    mask_stats,
    select_mask,
)


def rect_mask(w, h, rect, size=(64, 64)):
    """size is (width, height); rect is (x1, y1, x2, y2)."""
    arr = np.zeros((size[1], size[0]), dtype=bool)
    x1, y1, x2, y2 = rect
    arr[y1:y2, x1:x2] = True
    return mask_from_array(arr)


def write_mask_png(path, bitmap):
    PILImage.fromarray((bitmap * 255).astype(np.uint8), mode="L").save(path)


@pytest.fixture
def mask_tree(tmp_path):
    box_dir = tmp_path / "img_7" / "box0"
    box_dir.mkdir(parents=True)
    for i in range(3):
        bitmap = np.zeros((48, 64), dtype=bool)
        bitmap[10 : 20 + i, 10:30] = True
        write_mask_png(box_dir / f"m{i}.png", bitmap)
    (box_dir / "meta.json").write_text(json.dumps({"scores": [0.9, 0.7, 0.5]}))
    return tmp_path


def test_load_candidates_in_order(mask_tree):
    cs = load_candidates(mask_tree, "img_7", 0, expected_size=(64, 48))
    assert cs.image_id == "img_7" and cs.box_index == 0
    assert len(cs.candidates) == 3
    assert cs.scores == (0.9, 0.7, 0.5)
    # filename order: m0 has the smallest foreground
    assert cs.candidates[0].bitmap.sum() < cs.candidates[2].bitmap.sum()


def test_load_single_candidate(tmp_path):
    box_dir = tmp_path / "img" / "box1"
    box_dir.mkdir(parents=True)
    write_mask_png(box_dir / "m0.png", np.ones((8, 8), dtype=bool))
    cs = load_candidates(tmp_path, "img", 1)
    assert len(cs.candidates) == 1


def test_load_missing_masks(tmp_path):
    with pytest.raises(MissingMasks):
        load_candidates(tmp_path, "nope", 0)


def test_load_dimension_mismatch(tmp_path):
    box_dir = tmp_path / "img" / "box0"
    box_dir.mkdir(parents=True)
    write_mask_png(box_dir / "m0.png", np.ones((8, 8), dtype=bool))
    with pytest.raises(DimensionMismatch):
        load_candidates(tmp_path, "img", 0, expected_size=(16, 16))


def test_load_retains_empty_candidates(tmp_path):
    box_dir = tmp_path / "img" / "box0"
    box_dir.mkdir(parents=True)
    write_mask_png(box_dir / "m0.png", np.zeros((8, 8), dtype=bool))
    write_mask_png(box_dir / "m1.png", np.ones((8, 8), dtype=bool))
    cs = load_candidates(tmp_path, "img", 0)
    assert cs.candidates[0].is_empty and not cs.candidates[1].is_empty


def test_stats_symmetric_corners():
    arr = np.zeros((8, 8), dtype=bool)
    for y, x in [(0, 0), (0, 2), (2, 0), (2, 2)]:
        arr[y, x] = True
    s = mask_stats(mask_from_array(arr))
    assert (s.centroid_x, s.centroid_y) == (1.0, 1.0)


def test_stats_full_rectangle():
    s = mask_stats(rect_mask(64, 48, (0, 0, 4, 2)))
    assert (s.centroid_x, s.centroid_y) == (1.5, 0.5)
    assert s.bounding_rect == PixelBox(0, 0, 4, 2)
    assert s.aspect_ratio == 2.0
    assert s.area == 8


def test_stats_single_pixel():
    arr = np.zeros((16, 16), dtype=bool)
    arr[7, 5] = True
    s = mask_stats(mask_from_array(arr))
    assert (s.centroid_x, s.centroid_y) == (5.0, 7.0)
    assert s.area == 1 and s.aspect_ratio == 1.0


def test_stats_empty_mask():
    with pytest.raises(EmptyMask):
        mask_stats(mask_from_array(np.zeros((4, 4), dtype=bool)))


def test_stats_centroid_inside_rect():
    rng = np.random.default_rng(7)
    for _ in range(50):
        arr = rng.random((32, 32)) < 0.2
        if not arr.any():
            continue
        s = mask_stats(mask_from_array(arr))
        r = s.bounding_rect
        assert r.x1 <= s.centroid_x <= r.x2 - 1
        assert r.y1 <= s.centroid_y <= r.y2 - 1
        assert s.area <= r.area


def candidate_set(*rects):
    masks = tuple(rect_mask(64, 64, r) for r in rects)
    return MaskCandidateSet("img", 0, masks)


def test_select_highest_aspect_ratio():
    # bounding rects 20x20, 10x40, 30x15 -> ARs 1.0, 4.0, 2.0
    cs = candidate_set((0, 0, 20, 20), (0, 0, 10, 40), (0, 0, 30, 15))
    idx, _, stats = select_mask(cs)
    assert idx == 1 and stats.aspect_ratio == 4.0


def test_select_tie_breaks_to_lowest_index():
    cs = candidate_set((0, 0, 10, 20), (0, 0, 20, 10))
    assert select_mask(cs)[0] == 0


def test_select_skips_empty():
    empty = mask_from_array(np.zeros((64, 64), dtype=bool))
    full = rect_mask(64, 64, (0, 0, 10, 10))
    cs = MaskCandidateSet("img", 0, (empty, full))
    assert select_mask(cs)[0] == 1


def test_select_all_empty():
    empty = mask_from_array(np.zeros((4, 4), dtype=bool))
    with pytest.raises(AllCandidatesEmpty):
        select_mask(MaskCandidateSet("img", 0, (empty, empty)))


def test_select_permutation_invariant_bitmap():
    rects = [(0, 0, 20, 20), (0, 0, 10, 40), (0, 0, 30, 15)]
    baseline = select_mask(candidate_set(*rects))[1].bitmap
    import itertools

    for perm in itertools.permutations(rects):
        chosen = select_mask(candidate_set(*perm))[1].bitmap
        assert np.array_equal(chosen, baseline)
