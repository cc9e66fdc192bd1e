import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tct.exceptions import ArgumentError, DataError, FormatError
from tct.labeling import (
    UNLABELED,
    LabelMask,
    RoiRect,
    extract_training_set,
    load_mask_pgm,
    load_rois,
    rasterize_rois,
    save_mask_pgm,
    save_rois,
)
from tct.synth import default_training_rois


def test_full_and_empty():
    assert np.all(rasterize_rois([RoiRect(1, 0, 0, 4, 5)], 4, 5).labels == 1)
    assert np.all(rasterize_rois([], 4, 5).labels == UNLABELED)


def test_default_five_rectangles():
    rois = default_training_rois()
    assert sorted(r.label for r in rois) == [0, 0, 0, 1, 1]
    mask = rasterize_rois(rois, 90, 160)
    # brute-force count over the grid
    expected = np.zeros((90, 160), dtype=bool)
    for r in rois:
        for i in range(r.r0, r.r1):
            for j in range(r.c0, r.c1):
                expected[i, j] = True
    assert np.array_equal(mask.labeled, expected)
    X, y = extract_training_set(np.zeros((90 * 160, 10)), mask)
    assert X.shape[0] == sum(r.area for r in rois) == expected.sum()


def test_roi_validation():
    with pytest.raises(ArgumentError):
        RoiRect(1, 2, 0, 2, 3)
    with pytest.raises(ArgumentError):
        RoiRect(2, 0, 0, 1, 1)
    with pytest.raises(ArgumentError):
        rasterize_rois([RoiRect(1, 0, 0, 5, 5)], 4, 5)
    with pytest.raises(ArgumentError):
        rasterize_rois([RoiRect(1, 0, 0, 2, 2), RoiRect(0, 1, 1, 3, 3)], 4, 4)
    # same-label overlap is fine
    rasterize_rois([RoiRect(1, 0, 0, 2, 2), RoiRect(1, 1, 1, 3, 3)], 4, 4)


def test_extract_in_pixel_order():
    labels = np.full((2, 3), UNLABELED)
    labels[0, 2] = 1
    labels[1, 0] = 0
    labels[1, 2] = 1
    features = np.arange(12, dtype=float).reshape(6, 2)
    X, y = extract_training_set(features, LabelMask(labels))
    assert X[:, 0].tolist() == [4.0, 6.0, 10.0]
    assert y.tolist() == [1.0, 0.0, 1.0]
    all_x, _ = extract_training_set(features, LabelMask(np.array([[0, 1, 0], [1, 0, 1]])))
    assert all_x.shape[0] == 6


def test_single_class_rejected():
    with pytest.raises(DataError):
        extract_training_set(np.zeros((4, 1)), LabelMask(np.ones((2, 2))))


rect = st.builds(
    lambda lab, r0, c0, dr, dc: RoiRect(lab, r0, c0, r0 + dr, c0 + dc),
    st.just(1), st.integers(0, 8), st.integers(0, 8), st.integers(1, 4), st.integers(1, 4),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(rect, max_size=6), st.randoms())
def test_order_independent_and_idempotent(rois, rnd):
    mask = rasterize_rois(rois, 12, 12)
    shuffled = list(rois)
    rnd.shuffle(shuffled)
    assert rasterize_rois(shuffled, 12, 12) == mask
    assert rasterize_rois(rois + rois, 12, 12) == mask


def test_files_round_trip(tmp_path):
    rois = default_training_rois()
    save_rois(rois, tmp_path / "r.json")
    assert load_rois(tmp_path / "r.json") == rois
    mask = rasterize_rois(rois, 90, 160)
    save_mask_pgm(mask, tmp_path / "m.pgm")
    raw = (tmp_path / "m.pgm").read_bytes()
    assert raw.startswith(b"P5\n160 90\n255\n")
    assert set(raw[len(b"P5\n160 90\n255\n"):]) == {0, 128, 255}
    assert load_mask_pgm(tmp_path / "m.pgm") == mask


def test_malformed_roi_file(tmp_path):
    (tmp_path / "r.json").write_text('[{"label": 1}]')
    with pytest.raises(FormatError):
        load_rois(tmp_path / "r.json")


def test_mirror():
    roi = RoiRect(1, 0, 1, 2, 3)
    assert roi.mirrored(10) == RoiRect(1, 0, 7, 2, 9)
    mask = rasterize_rois([roi], 2, 10)
    assert mask.fliplr() == rasterize_rois([roi.mirrored(10)], 2, 10)
