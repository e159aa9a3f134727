"""Semantic localization: window grids, map construction, the four metrics."""

from __future__ import annotations

import numpy as np
import pytest

from satpair import (
    CropRect,
    GroundTruthRegion,
    NoWindowsError,
    SemLocMap,
    SemLocWeights,
    WeightSumInvalidError,
    WindowTooLargeError,
    prob_centroid,
    r_as,
    r_da,
    r_mi,
    r_su,
    semloc_report,
    similarity_map,
    window_grid,
)


def _point_mass(w, h, cx, cy):
    mass = np.zeros((h, w), dtype=np.float32)
    mass[cy, cx] = 1.0
    return SemLocMap(mass)


def _uniform(w, h):
    return SemLocMap(np.full((h, w), 1.0 / (w * h), dtype=np.float32))


def test_window_grid_degenerate_scene():
    rects = window_grid(512, 512, 512, 64)
    assert rects == [CropRect(0, 0, 512, 512)]


def test_window_grid_2x2():
    rects = window_grid(1024, 1024, 512, 512)
    assert len(rects) == 4
    offsets = {(r.x, r.y) for r in rects}
    assert offsets == {(0, 0), (512, 0), (0, 512), (512, 512)}


def test_window_grid_edge_clamp():
    rects = window_grid(768, 768, 512, 512)
    xs = sorted({r.x for r in rects})
    ys = sorted({r.y for r in rects})
    assert xs == [0, 256] and ys == [0, 256]
    assert len(rects) == 4


def test_window_grid_rejects_oversized_window():
    with pytest.raises(WindowTooLargeError):
        window_grid(256, 512, 512, 128)


def test_similarity_map_single_window_uniform():
    m = similarity_map([(CropRect(0, 0, 64, 64), 3.5)], 64, 64, 16)
    np.testing.assert_allclose(m.mass, 1.0 / 16.0, atol=1e-7)


def test_similarity_map_disjoint_windows():
    windows = [(CropRect(0, 0, 32, 32), 1.0), (CropRect(32, 32, 32, 32), 0.0)]
    m = similarity_map(windows, 64, 64, 32)
    # all mass lands uniformly on the first window's single cell
    assert m.mass[0, 0] == 1.0
    assert m.mass[1, 1] == 0.0


def test_similarity_map_overlap_mean_rule():
    # A covers cols 0..1, B covers cols 1..2 of a 3-col map: the shared middle
    # cell averages to (a+b)/2 before the shift-and-normalize step
    a, b = 2.0, 6.0
    windows = [(CropRect(0, 0, 64, 32), a), (CropRect(32, 0, 64, 32), b)]
    m = similarity_map(windows, 96, 32, 32)
    raw = np.array([a, (a + b) / 2.0, b])
    expected = raw - raw.min()
    expected /= expected.sum()
    np.testing.assert_allclose(m.mass[0], expected, atol=1e-7)


def test_similarity_map_shift_invariance():
    windows = [(CropRect(0, 0, 32, 32), 0.2), (CropRect(32, 0, 32, 32), 0.9)]
    m1 = similarity_map(windows, 64, 32, 32)
    shifted = [(r, s + 123.0) for r, s in windows]
    m2 = similarity_map(shifted, 64, 32, 32)
    np.testing.assert_allclose(m1.mass, m2.mass, atol=1e-6)


def test_similarity_map_requires_windows():
    with pytest.raises(NoWindowsError):
        similarity_map([], 64, 64, 16)


def test_prob_centroid_point_mass():
    assert prob_centroid(_point_mass(6, 6, 2, 3)) == (2.5, 3.5)


def test_prob_centroid_uniform():
    cx, cy = prob_centroid(_uniform(8, 6))
    assert abs(cx - 4.0) < 1e-6 and abs(cy - 3.0) < 1e-6


def test_prob_centroid_two_point_mean():
    mass = np.zeros((4, 4), dtype=np.float32)
    mass[0, 0] = 0.5
    mass[3, 3] = 0.5
    assert prob_centroid(SemLocMap(mass)) == (2.0, 2.0)


def test_r_su_containment():
    m = _point_mass(8, 8, 2, 2)
    gt = GroundTruthRegion([CropRect(1, 1, 3, 3)], 8, 8)
    assert r_su(m, gt) == 1.0


def test_r_su_uniform_half():
    m = _uniform(8, 8)
    gt = GroundTruthRegion([CropRect(0, 0, 8, 4)], 8, 8)
    assert abs(r_su(m, gt) - 0.5) < 1e-6


def test_r_su_no_mass_inside():
    m = _point_mass(8, 8, 7, 7)
    gt = GroundTruthRegion([CropRect(0, 0, 2, 2)], 8, 8)
    assert r_su(m, gt) == 0.0


def test_r_su_complement_sums_to_one():
    rng = np.random.default_rng(0)
    raw = rng.random((6, 6))
    m = SemLocMap((raw / raw.sum()).astype(np.float32))
    gt = GroundTruthRegion([CropRect(1, 2, 3, 2)], 6, 6)
    inside = r_su(m, gt)
    outside = float(m.mass.astype(np.float64)[~gt.mask()].sum())
    assert abs(inside + outside - 1.0) < 1e-6


def test_r_as_coincident_centroids():
    m = _point_mass(7, 7, 3, 3)
    gt = GroundTruthRegion([CropRect(3, 3, 1, 1)], 7, 7)
    assert r_as(m, gt) == 0.0


def test_r_as_opposite_corners_clamps_to_one():
    m = _point_mass(8, 8, 0, 0)
    gt = GroundTruthRegion([CropRect(7, 7, 1, 1)], 8, 8)
    assert r_as(m, gt) == 1.0


def test_r_as_symmetric_map_about_gt_centroid():
    mass = np.zeros((5, 5), dtype=np.float32)
    mass[0, 0] = 0.25
    mass[4, 4] = 0.25
    mass[0, 4] = 0.25
    mass[4, 0] = 0.25
    m = SemLocMap(mass)
    gt = GroundTruthRegion([CropRect(2, 2, 1, 1)], 5, 5)
    assert r_as(m, gt) < 1e-9


def test_r_da_point_mass():
    assert r_da(_point_mass(9, 9, 4, 4)) == 1.0


def test_r_da_opposite_corner_masses():
    # continuous-limit value is 0; on a discrete W-cell grid the corner cell
    # centers sit half a cell inside, leaving exactly 1/W
    for w in (4, 16, 64):
        mass = np.zeros((w, w), dtype=np.float32)
        mass[0, 0] = 0.5
        mass[w - 1, w - 1] = 0.5
        val = r_da(SemLocMap(mass))
        assert abs(val - 1.0 / w) < 1e-6
    assert r_da(SemLocMap(mass)) < 0.02  # approaches the derived 0


def test_r_da_uniform_strictly_interior():
    val = r_da(_uniform(10, 10))
    assert 0.0 < val < 1.0


def test_r_mi_perfect_scores():
    for weights in (SemLocWeights(), SemLocWeights(0.5, 0.25, 0.25), SemLocWeights(1.0, 0.0, 0.0)):
        assert abs(r_mi(1.0, 0.0, 1.0, weights) - 1.0) < 1e-12


def test_r_mi_worst_scores():
    assert r_mi(0.0, 1.0, 0.0, SemLocWeights()) == 0.0


def test_r_mi_published_row_arithmetic():
    val = r_mi(0.7349, 0.2877, 0.7070, SemLocWeights())
    assert abs(val - 0.71807) < 1e-4


def test_r_mi_monotonicity():
    w = SemLocWeights()
    base = r_mi(0.5, 0.5, 0.5, w)
    assert r_mi(0.6, 0.5, 0.5, w) > base
    assert r_mi(0.5, 0.6, 0.5, w) < base
    assert r_mi(0.5, 0.5, 0.6, w) > base


def test_weights_validation():
    with pytest.raises(WeightSumInvalidError):
        SemLocWeights(0.5, 0.5, 0.5)
    with pytest.raises(WeightSumInvalidError):
        SemLocWeights(-0.2, 0.6, 0.6)


def test_metrics_translation_invariance():
    mass = np.zeros((10, 10), dtype=np.float32)
    mass[2, 3] = 0.75
    mass[3, 3] = 0.25
    m1 = SemLocMap(mass)
    gt1 = GroundTruthRegion([CropRect(2, 1, 3, 4)], 10, 10)
    shifted = np.roll(np.roll(mass, 4, axis=0), 2, axis=1)
    m2 = SemLocMap(shifted)
    gt2 = GroundTruthRegion([CropRect(4, 5, 3, 4)], 10, 10)
    assert abs(r_su(m1, gt1) - r_su(m2, gt2)) < 1e-7
    assert abs(r_as(m1, gt1) - r_as(m2, gt2)) < 1e-7
    assert abs(r_da(m1) - r_da(m2)) < 1e-7


def test_random_maps_stay_in_unit_interval():
    rng = np.random.default_rng(99)
    for _ in range(200):
        w, h = int(rng.integers(2, 12)), int(rng.integers(2, 12))
        raw = rng.random((h, w))
        m = SemLocMap((raw / raw.sum()).astype(np.float32))
        gx = int(rng.integers(0, w))
        gy = int(rng.integers(0, h))
        gw = int(rng.integers(1, w - gx + 1))
        gh = int(rng.integers(1, h - gy + 1))
        gt = GroundTruthRegion([CropRect(gx, gy, gw, gh)], w, h)
        rsu, ras, rda = r_su(m, gt), r_as(m, gt), r_da(m)
        for val in (rsu, ras, rda, r_mi(rsu, ras, rda, SemLocWeights())):
            assert 0.0 <= val <= 1.0


def test_report_composes_individual_ops():
    rng = np.random.default_rng(3)
    rects = window_grid(128, 128, 64, 64)
    dim = 8
    embs = []
    for rect in rects:
        v = rng.normal(size=dim)
        embs.append((rect, v / np.linalg.norm(v)))
    q = rng.normal(size=dim)
    q /= np.linalg.norm(q)
    gt = GroundTruthRegion([CropRect(0, 0, 2, 2)], 4, 4)
    weights = SemLocWeights()
    rep = semloc_report(embs, q, gt, weights, 128, 128, 32)
    scored = [(rect, float(np.asarray(v) @ q)) for rect, v in embs]
    m = similarity_map(scored, 128, 128, 32)
    assert rep["r_su"] == r_su(m, gt)
    assert rep["r_as"] == r_as(m, gt)
    assert rep["r_da"] == r_da(m)
    assert rep["r_mi"] == r_mi(rep["r_su"], rep["r_as"], rep["r_da"], weights)


def test_report_query_aligned_with_gt_window():
    # query equals the embedding of the only window overlapping the GT,
    # orthogonal to every other window: that construction maximizes R_su
    rects = window_grid(128, 128, 64, 64)
    dim = len(rects)
    embs = [(rect, np.eye(dim)[i]) for i, rect in enumerate(rects)]
    gt = GroundTruthRegion([CropRect(0, 0, 2, 2)], 4, 4)  # cells of window 0
    weights = SemLocWeights()
    rep0 = semloc_report(embs, np.eye(dim)[0], gt, weights, 128, 128, 32)
    others = [
        semloc_report(embs, np.eye(dim)[i], gt, weights, 128, 128, 32)["r_su"]
        for i in range(1, dim)
    ]
    assert rep0["r_su"] >= max(others)


def test_uniform_scores_give_uniform_map_metrics():
    rects = window_grid(128, 128, 64, 64)
    scored = [(r, 0.6) for r in rects]
    m = similarity_map(scored, 128, 128, 32)
    np.testing.assert_allclose(m.mass, 1.0 / 16.0, atol=1e-7)
    gt = GroundTruthRegion([CropRect(1, 1, 2, 2)], 4, 4)  # centered GT
    assert r_as(m, gt) < 1e-9
