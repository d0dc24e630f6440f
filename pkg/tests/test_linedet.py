import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from antiisrj import linedet
from antiisrj.linedet import DetectorConfig, LineSegment, NoTargetRidge
from antiisrj.tfr import TfImage


def draw(shape, segments, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    g = noise * rng.random(shape)
    for (c1, r1, c2, r2), gaps in segments:
        cols = np.arange(c1, c2 + 1)
        rows = np.rint(r1 + (r2 - r1) * (cols - c1) / (c2 - c1)).astype(int)
        keep = np.ones(cols.size, bool) if gaps is None else gaps(cols)
        g[rows[keep], cols[keep]] = 1.0
    return TfImage(g, 0.0, 1.0, 0.0, 1.0, "GLWD")


# ---------------------------------------------------------------- formulas

def test_matching_loss_gated_by_length():
    truth = LineSegment(0, 0, 10, 0)
    short = LineSegment(0, 1, 3, 1)
    assert linedet.matching_loss(short, truth, gamma1=5) == 0.0
    long_ = LineSegment(1, 1, 11, 1)
    # |(1,1)-(0,0)| + |(11,1)-(10,0)| + |(6,1)-(5,0)| in L1
    assert linedet.matching_loss(long_, truth, gamma1=5) == 6.0


@pytest.mark.parametrize("r, mu, k", [(10, 4, 4), (8, 4, 3), (4, 4, 1), (2, 4, 1), (100, 10, 19)])
def test_sol_count(r, mu, k):
    assert linedet.sol_count(r, mu) == k


@pytest.mark.parametrize("beta", [0.25, 0.375, 0.5])
def test_sol_split_overlap_starts(beta):
    seg = LineSegment(0.0, 0.0, 10.0, 0.0)
    subs = linedet.sol_split(seg, mu=4, gamma1=5, beta=beta)
    k = 4
    assert len(subs) == k
    L = 10.0 / (k - beta * (k - 1))
    for i, s in enumerate(subs):
        assert s.t1 == pytest.approx(i * L * (1 - beta), abs=1e-12)
    for a, b in zip(subs[:-1], subs[1:]):
        assert b.t1 == pytest.approx(a.t2 - beta * (a.t2 - a.t1), abs=1e-12)
    assert subs[0].t1 == 0.0 and subs[-1].t2 == 10.0


def test_sol_split_short_segment_unsplit():
    seg = LineSegment(0.0, 0.0, 3.0, 4.0)
    assert linedet.sol_split(seg, mu=1, gamma1=5) == [seg]


def test_continuity_loss_counts_small_gaps():
    segs = [LineSegment(0, 0, 1, 0), LineSegment(1.5, 0, 2, 0), LineSegment(6, 0, 7, 0), LineSegment(7.2, 0, 8, 0)]
    assert linedet.segment_gap(segs[0], segs[1]) == pytest.approx(0.5)
    assert linedet.continuity_loss(segs, gamma2=1.0) == 2
    assert linedet.continuity_loss(segs, gamma2=5.0) == 3
    assert linedet.continuity_loss(segs[:1], gamma2=5.0) == 0


@given(st.floats(min_value=0.1, max_value=1e3), st.floats(min_value=0.1, max_value=50))
def test_sol_count_closed_form(r, mu):
    k = linedet.sol_count(r, mu)
    assert k >= 1
    if r / (mu / 2) >= 2:
        assert k == int(np.floor(r / (mu / 2) + 1e-9)) - 1


# ---------------------------------------------------------------- detector

def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(beta=0.6)
    with pytest.raises(ValueError):
        DetectorConfig(gamma1=2.0, gamma2=3.0)
    assert DetectorConfig(gamma1=40).mu == 10
    assert DetectorConfig(slope_bins=1.0).rho_step == pytest.approx(np.sqrt(0.5))


def test_detects_continuous_line_over_dashed():
    shape = (60, 120)
    dashed = ((10, 40, 110, 40), lambda c: (c // 6) % 2 == 0)
    solid = ((10, 10, 100, 50), None)
    img = draw(shape, [dashed, solid], noise=0.05)
    cfg = DetectorConfig(gamma1=30, n_angles=180)
    seg = linedet.detect_target_ridge(img, cfg)
    assert seg.t1 == pytest.approx(10, abs=2)
    assert seg.t2 == pytest.approx(100, abs=2)
    assert seg.slope_k == pytest.approx(40 / 90, abs=0.03)


def test_short_line_raises_no_target_ridge():
    img = draw((40, 80), [((10, 20, 25, 20), None)])
    with pytest.raises(NoTargetRidge):
        linedet.detect_target_ridge(img, DetectorConfig(gamma1=30))


def test_slope_prior_restricts_angles():
    shape = (60, 120)
    img = draw(shape, [((5, 50, 115, 50), None), ((10, 5, 60, 55), None)])
    seg = linedet.detect_target_ridge(img, DetectorConfig(gamma1=20, slope_bins=1.0, n_angles=11,
                                                          angle_halfwidth_deg=3))
    assert seg.slope_k == pytest.approx(1.0, abs=0.05)


def test_segment_csv_round_trip(tmp_path):
    segs = [LineSegment(1e-6, -3.5, 2e-6, 7.25, 0.5), LineSegment(0.0, 0.0, 1.0, 1.0)]
    linedet.write_segments_csv(tmp_path / "s.csv", segs)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t1,u1,t2,u2,score"
    assert linedet.read_segments_csv(tmp_path / "s.csv") == segs


def test_segment_geometry():
    s = LineSegment(0, 0, 3, 4)
    assert s.length == 5.0
    assert s.slope_k == pytest.approx(4 / 3)
    assert np.allclose(s.point_at(0.5), [1.5, 2])
    with pytest.raises(ValueError):
        LineSegment(1, 0, 1, 2)


def test_overlay_draws_segment():
    img = TfImage(np.zeros((10, 10)), 0.0, 1.0, 0.0, 1.0, "GLWD")
    ov = linedet.overlay(img, [LineSegment(0, 0, 9, 9)])
    assert np.array_equal(ov, np.eye(10))


@pytest.mark.parametrize("scale", [1e-6, 3.0, 1e6])
def test_gate_invariance_under_magnitude_scaling(scale):
    dashed = ((10, 40, 110, 40), lambda c: (c // 6) % 2 == 0)
    img = draw((60, 120), [dashed, ((10, 10, 100, 50), None)], noise=0.05)
    cfg = DetectorConfig(gamma1=30, n_angles=180, binarize_percentile=90)
    ref = linedet.detect_target_ridge(img, cfg)
    scaled = dataclasses.replace(img, grid=img.grid * scale)
    seg = linedet.detect_target_ridge(scaled, cfg)
    assert (seg.t1, seg.u1, seg.t2, seg.u2) == (ref.t1, ref.u1, ref.t2, ref.u2)


def test_length_monotonicity_across_gamma1():
    cfg = DetectorConfig(gamma1=40, n_angles=90)
    long_line = draw((50, 120), [((10, 25, 70, 25), None)], noise=0.02)
    assert linedet.detect_target_ridge(long_line, cfg).length > 40
    short_line = draw((50, 120), [((10, 25, 45, 25), None)], noise=0.02)
    with pytest.raises(NoTargetRidge):
        linedet.detect_target_ridge(short_line, cfg)
