import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antiisrj import harness, siggen, suppress, tfr
from antiisrj.linedet import LineSegment
from antiisrj.siggen import ComplexSignal, reference_pulse
from antiisrj.suppress import CfarConfig, RangeProfile


def echo_line(cfg, margin_s=0.0):
    wf = cfg.waveform
    tau = cfg.target.delay_s
    k = wf.chirp_rate
    return LineSegment(tau - margin_s, -wf.bandwidth_hz / 2 - k * margin_s,
                       tau + wf.pulse_width_s + margin_s, wf.bandwidth_hz / 2 + k * margin_s)


def test_pulse_compression_peak_at_target(table1):
    sig = siggen.simulate(table1)
    prof = suppress.pulse_compress(sig.echo, reference_pulse(table1.waveform))
    r = prof.ranges_m[np.argmax(prof.magnitudes)]
    assert r == pytest.approx(900.0, abs=prof.range_step_m)
    assert prof.range_step_m == pytest.approx(0.749481145)
    # 900 m is 1200.83 samples, so the compressed peak straddles two bins
    assert 0.98 * 200.0 <= prof.magnitudes.max() <= 200.0


def test_jammer_false_target_at_927(table1):
    sig = siggen.simulate(table1)
    prof = suppress.pulse_compress(sig.jamming[0], reference_pulse(table1.waveform))
    r = prof.ranges_m[np.argmax(prof.magnitudes)]
    assert r == pytest.approx(927.0, abs=3 * prof.range_step_m)


def stft_capture(echo, line, width=7):
    frames = tfr.stft(echo, 64, 16)
    power = np.abs(frames.frames) ** 2
    return float((power * suppress.build_mask(line, frames, width).grid).sum() / power.sum())


def test_mask_on_detected_line_keeps_echo_energy(table1):
    echo = siggen.simulate(table1).echo
    res = harness.run_scenario(table1, "proposed", seed=7)
    margin = 16 / table1.waveform.sample_rate_hz
    assert stft_capture(echo, harness.extend_segment(res.ridge, margin)) >= 0.95


def test_mask_capture_frozen_for_true_line(table1):
    echo = siggen.simulate(table1).echo
    assert stft_capture(echo, echo_line(table1)) == pytest.approx(0.9145, abs=1e-3)
    margin = 16 / table1.waveform.sample_rate_hz
    assert stft_capture(echo, echo_line(table1, margin)) == pytest.approx(0.9622, abs=1e-3)


def test_horizontal_mask_has_w_bins(table1):
    sig = ComplexSignal(np.zeros(1024), 200e6)
    frames = tfr.stft(sig, 64, 16)
    f0 = frames.freqs_hz[40]
    mask = suppress.build_mask(LineSegment(1e-6, f0, 3e-6, f0), frames, 3)
    on = np.flatnonzero(mask.grid.any(axis=0))
    assert np.all(mask.grid[:, on].sum(axis=0) == 3)
    assert np.all(mask.grid[39:42, on] == 1)
    assert np.all(frames.times_s[on] >= 1e-6) and np.all(frames.times_s[on] <= 3e-6)


def test_mask_geometry(table1):
    echo = siggen.simulate(table1).echo
    frames = tfr.stft(echo, 64, 16)
    mask = suppress.build_mask(echo_line(table1), frames, 7)
    on_cols = np.flatnonzero(mask.grid.any(axis=0))
    assert np.all(mask.grid[:, on_cols].sum(axis=0) <= 7)
    assert np.all(mask.grid[:, on_cols].sum(axis=0) >= 6)
    assert frames.times_s[on_cols[0]] >= table1.target.delay_s


def test_mask_rejects_out_of_range_line(table1):
    frames = tfr.stft(siggen.simulate(table1).echo, 64, 16)
    with pytest.raises(ValueError):
        suppress.build_mask(LineSegment(20e-6, 0, 21e-6, 1e6), frames)
    with pytest.raises(ValueError):
        suppress.build_mask(LineSegment(1e-6, 0, 2e-6, 5e8), frames)


def test_full_mask_is_identity(rng):
    sig = ComplexSignal(rng.standard_normal(512) + 1j * rng.standard_normal(512), 200e6)
    frames = tfr.stft(sig)
    mask = suppress.TfMask(np.ones(frames.frames.shape), (0, 0, 1, 0), 1e9, 64, 16)
    assert np.allclose(suppress.filter_stft(sig, mask).samples, sig.samples, atol=1e-12)


def test_cfar_alpha_frozen():
    assert suppress.cfar_alpha(32, 1e-4) == pytest.approx(10.672685829226367, rel=1e-12)


def test_cfar_detects_single_target(rng):
    mags = np.abs(rng.standard_normal(500) + 1j * rng.standard_normal(500)) / math.sqrt(2)
    mags[250] = 30.0
    mags[251] = 20.0
    dets = suppress.cfar_detect(RangeProfile(mags, 0.0, 1.0))
    assert (250.0, 30.0) in dets
    assert all(abs(r - 251) > 0.5 for r, _ in dets)


@settings(max_examples=5, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_cfar_false_alarm_rate_near_pfa(seed):
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(200_000) + 1j * rng.standard_normal(200_000)) / math.sqrt(2)
    rate = suppress.cfar_cells(RangeProfile(np.abs(z), 0.0, 1.0), CfarConfig(pfa=1e-3)).mean()
    assert 0.5e-3 <= rate <= 2e-3


def test_cfar_short_profile_rejected():
    with pytest.raises(ValueError):
        suppress.cfar_detect(RangeProfile(np.ones(10), 0.0, 1.0))


def test_metrics_closed_form():
    before = np.zeros(100)
    after = np.zeros(100)
    before[[20, 50]] = [10.0, 20.0]
    after[[20, 50]] = [9.0, 2.0]
    rep = suppress.metrics(RangeProfile(before, 0, 1), RangeProfile(after, 0, 1), 20.0, [50.0], 20.0)
    assert rep.sjr_before_db == pytest.approx(20 * math.log10(0.5))
    assert rep.sjr_after_db == pytest.approx(20 * math.log10(4.5))
    assert rep.sjrif_db == pytest.approx(20 * math.log10(9.0))
    assert rep.slr_db == pytest.approx(20 * math.log10(0.9))
    assert rep.false_target_residual_db == pytest.approx([20 * math.log10(0.2)])


def test_metrics_without_false_target_and_full_removal():
    p = np.zeros(50)
    p[10] = 5.0
    rep = suppress.metrics(RangeProfile(p, 0, 1), RangeProfile(p, 0, 1), 10.0)
    assert rep.no_false_target and rep.sjrif_db is None and rep.slr_db == 0.0
    b = p.copy()
    b[30] = 5.0
    rep = suppress.metrics(RangeProfile(b, 0, 1), RangeProfile(p, 0, 1), 10.0, [30.0])
    assert rep.sjr_after_db == math.inf and rep.false_target_residual_db == [-math.inf]


def test_report_text_round_trip():
    rep = suppress.SuppressionReport(-3.0, 12.5, 15.5, -0.25, 900.0, 900.1, [927.0], [-20.0], {"x": 1.5})
    parsed = suppress.parse_report(rep.to_text())
    assert parsed["sjrif_db"] == "15.5"
    assert parsed["false_target_ranges_m"] == "927.0"
    assert parsed["no_false_target"] == "false"
    assert parsed["x"] == "1.5"


def test_baseline_zeroes_strong_slices():
    x = np.full(400, 0.1 + 0j)
    x[100:125] = 10.0
    x[200:225] = 10.0
    out = suppress.baseline_energy_function(ComplexSignal(x, 1.0)).samples
    assert np.all(out[104:121] == 0) and np.all(out[204:221] == 0)
    assert np.all(out[:90] == x[:90])


def test_baseline_recovers_noiseless_target(table1):
    cfg = table1.with_overrides(sjr_db=-10.0)
    sig = siggen.simulate(cfg)
    ref = reference_pulse(cfg.waveform)
    out = suppress.baseline_energy_function(sig.clean)
    rep = suppress.metrics(suppress.pulse_compress(sig.clean, ref), suppress.pulse_compress(out, ref),
                           900.0, cfg.false_target_ranges_m)
    assert rep.sjrif_db > 0


def test_profile_csv(tmp_path):
    prof = RangeProfile(np.array([1.0, 10.0]), 5.0, 0.5)
    suppress.write_profile_csv(tmp_path / "p.csv", prof)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "range_m,magnitude_db"
    assert lines[2] == "5.5,20"


def test_proposed_filter_end_to_end(table1):
    res = harness.run_scenario(table1, "proposed", seed=7)
    assert res.ridge_found and res.success
    assert res.report.sjrif_db >= 10
    assert res.report.slr_db >= -2
