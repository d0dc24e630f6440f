import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antiisrj import tfr
from antiisrj.lct import Grid, LctParams
from antiisrj.siggen import ComplexSignal

N_TABLE1 = math.pi * 1e14
FS = 200e6


def noise_signal(n=200, seed=1):
    rng = np.random.default_rng(seed)
    return ComplexSignal(rng.standard_normal(n) + 1j * rng.standard_normal(n), FS, 0.0)


def test_stft_round_trip(rng):
    sig = ComplexSignal(rng.standard_normal(2000) + 1j * rng.standard_normal(2000), FS, 3e-6)
    frames = tfr.stft(sig, 64, 16)
    back = tfr.istft(frames)
    assert back.same_grid(sig)
    assert np.linalg.norm(back.samples - sig.samples) / np.linalg.norm(sig.samples) <= 1e-10


def test_stft_axes_and_tone(rng):
    t = np.arange(1024) / FS
    sig = ComplexSignal(np.exp(2j * np.pi * 25e6 * t), FS, 0.0)
    frames = tfr.stft(sig, 64, 16)
    assert frames.freqs_hz[0] == -FS / 2
    assert frames.freqs_hz[1] - frames.freqs_hz[0] == pytest.approx(FS / 64)
    mid = frames.frames[:, frames.frames.shape[1] // 2]
    assert frames.freqs_hz[np.argmax(np.abs(mid))] == pytest.approx(25e6)


def test_stft_rejects_non_cola_hop(rng):
    sig = noise_signal()
    with pytest.raises(ValueError):
        tfr.stft(sig, 64, 48, window=np.ones(64) * np.linspace(0.1, 1, 64))


def test_glwd_reduces_to_wd():
    sig = noise_signal()
    p = tfr.GlwdParams.wd_reduction(N_TABLE1)
    W = tfr.wd(sig, n_freq=512, time_unit_s=p.time_unit_s)
    G = tfr.glwd(sig, p, u_grid=Grid(W.u0, W.du, W.grid.shape[0]), col_step=2)
    assert W.values.shape == G.values.shape
    err = np.abs(2 * np.pi * G.values - W.values).max() / np.abs(W.values).max()
    assert err <= 1e-8
    assert np.abs(W.values.imag).max() <= 1e-12 * np.abs(W.values).max()


def test_wd_of_chirp_sits_on_instantaneous_frequency():
    T = 1 / math.sqrt(2 * N_TABLE1)
    t = np.arange(-100, 100) / FS
    sig = ComplexSignal(np.exp(1j * N_TABLE1 * t * t), FS, t[0])
    W = tfr.wd(sig, n_freq=512, time_unit_s=T, lag_cap_s=0.2e-6)
    col = W.grid.shape[1] // 2
    u_peak = W.u_axis[np.argmax(W.grid[:, col])]
    x = W.t_axis[col] / T
    assert u_peak == pytest.approx(x, abs=2 * W.du)  # u = 2 n' x with n' = 1/2


@pytest.mark.parametrize("B, A1, A2, slope", [
    (LctParams.identity(), LctParams(0, 4, -0.25, 0), LctParams(0, 4, -0.25, 0), 4.0),
    (LctParams(0.5, 0.5, 1.0, 3.0), LctParams(0, 2, -0.5, 0), LctParams(0, 3, -1 / 3, 0), 9.6),
    (LctParams(0.2, 0.3, -8 / 3, 1.0), LctParams(0, 4, -0.25, 0), LctParams(0, 4, -0.25, 0), -40 / 3),
])
def test_ridge_theory_frozen_slopes(B, A1, A2, slope):
    p = tfr.GlwdParams(B, B, A1, A2, N_TABLE1)
    assert p.ridge_feasible
    s, c = tfr.ridge_line_theoretical(p, 3.0)
    assert s == pytest.approx(slope, rel=1e-12)
    assert c == pytest.approx((p.h1 + p.h2) * 3.0 / p.S, rel=1e-12)


def test_glwd_ridge_follows_theory_for_short_chirp():
    p = tfr.select_glwd_params(N_TABLE1)
    T = p.time_unit_s
    t = np.arange(-150, 150) / FS
    m = 3.0
    sig = ComplexSignal(np.exp(1j * (m / T * t + N_TABLE1 * t * t)), FS, t[0])
    img = tfr.glwd(sig, p, n_u=800, col_step=4, lag_cap_s=0.3e-6)
    slope, icpt = tfr.ridge_line_theoretical(p, m)
    x = img.t_axis / T
    u = img.u_axis[np.argmax(img.grid, axis=0)]
    mid = slice(len(x) // 4, 3 * len(x) // 4)
    fit = np.polyfit(x[mid], u[mid], 1)
    assert fit[0] == pytest.approx(slope, rel=0.02)
    assert abs(fit[1] - icpt) <= 2 * img.du


def test_selector_default_and_gain():
    p = tfr.select_glwd_params(N_TABLE1)
    assert p.B1 == LctParams.identity() and p.B2 == LctParams.identity()
    assert p.A1 == LctParams(0, 4, -0.25, 0) and p.A2 == p.A1
    assert p.osnr_gain == pytest.approx(4.0)
    assert p.ridge_feasible
    assert p.time_unit_s == pytest.approx(3.989422804014327e-08, rel=1e-12)


def test_selector_infeasible_preferences():
    with pytest.raises(tfr.InfeasiblePreferencesError):
        tfr.select_glwd_params(N_TABLE1, tfr.SelectorPreferences(min_gain=1e6))


def test_degenerate_params_rejected():
    I = LctParams.identity()
    p = tfr.GlwdParams(I, I, LctParams(0, 1, -1, 0), LctParams(0, -1, 1, 0), N_TABLE1)
    with pytest.raises(tfr.DegenerateParamsError):
        tfr.ridge_line_theoretical(p, 0.0)
    with pytest.raises(tfr.DegenerateParamsError):
        tfr.glwd(noise_signal(32), p, n_u=8)


def test_osnr_formula_wd_is_two_pi_over_d():
    p = tfr.GlwdParams.wd_reduction(N_TABLE1)
    assert tfr.osnr_glwd(p, 0.5) == pytest.approx(2 * math.pi / 0.5)
    with pytest.raises(ValueError):
        tfr.osnr_glwd(p, 0.0)


def test_monte_carlo_osnr_small_run():
    p = tfr.GlwdParams.wd_reduction(N_TABLE1)
    est = tfr.monte_carlo_osnr(p, FS, n_trials=300, seed=3)
    assert est.empirical == pytest.approx(est.formula, rel=0.25)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0, max_value=1e-5), st.floats(min_value=-5e7, max_value=5e7))
def test_physical_mapping_round_trip(t_s, f_hz):
    p = tfr.select_glwd_params(N_TABLE1)
    x, u = tfr.physical_to_glwd(p, t_s, f_hz)
    t2, f2 = tfr.glwd_to_physical(p, x, u)
    assert t2 == pytest.approx(t_s, abs=1e-15)
    assert f2 == pytest.approx(f_hz, abs=1e-3)


def test_rasterize_scales(rng):
    frames = tfr.stft(noise_signal(512), 64, 16)
    db = tfr.rasterize(frames)
    assert db.source_tag == "STFT"
    assert db.grid.min() >= 0 and db.grid.max() == pytest.approx(1.0)
    vals = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    img = tfr.TfImage(np.abs(vals), 0.0, 1.0, 0.0, 1.0, "GLWD", values=vals)
    lin = tfr.rasterize(img, scale="linear", part="real")
    order = np.argsort(vals.real, axis=None)
    assert np.all(np.diff(lin.grid.ravel()[order]) >= 0)
    with pytest.raises(ValueError):
        tfr.rasterize(img, scale="cubic")


def test_pgm_and_csv_round_trip(tmp_path):
    g = np.linspace(0, 1, 12).reshape(3, 4)
    img = tfr.TfImage(g, 1e-6, 5e-9, -2.0, 0.5, "GLWD")
    side = tfr.write_pgm(tmp_path / "a.pgm", img)
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5")
    back = tfr.read_pgm(tmp_path / "a.pgm")
    assert back.shape == (3, 4)
    # top row is the highest u, i.e. grid row 2
    assert np.array_equal(back, np.round(g[::-1] * 255).astype(back.dtype))
    assert "u_of_row = -1.0 - 0.5 * row" in side.read_text()
    tfr.write_image_csv(tmp_path / "a.csv", img)
    data = np.loadtxt(tmp_path / "a.csv", delimiter=",", skiprows=1)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,u,magnitude"
    assert data.shape == (12, 3)


def test_continuity_score_continuous_vs_gated():
    g = np.zeros((20, 100))
    g[10, :] = 1.0
    img = tfr.TfImage(g, 0.0, 1.0, 0.0, 1.0, "GLWD")
    line = type("L", (), dict(t1=0.0, u1=10.0, t2=99.0, u2=10.0))
    assert tfr.tf_continuity_score(img, line) == 1.0
    g2 = g.copy()
    g2[10, ::3] = 0.0
    assert tfr.tf_continuity_score(img.with_grid(g2), line) == pytest.approx(2 / 3, abs=0.01)


def test_tfimage_validation():
    with pytest.raises(ValueError):
        tfr.TfImage(np.zeros((2, 2)), 0, 1, 0, 1, "XYZ")
    with pytest.raises(ValueError):
        tfr.TfImage(np.zeros((2, 2)), 0, -1, 0, 1, "WD")
