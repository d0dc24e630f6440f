import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antiisrj import siggen
from antiisrj.siggen import ComplexSignal, TimeGrid


def test_echo_occupies_pulse_interval(table1):
    grid = TimeGrid.from_config(table1)
    echo = siggen.gen_echo(table1.waveform, table1.target, grid)
    on = np.flatnonzero(np.abs(echo.samples) > 0)
    assert on.size == 200
    assert echo.times[on[0]] == pytest.approx(table1.target.delay_s, abs=echo.dt)
    assert np.allclose(np.abs(echo.samples[on]), 1.0)


def test_echo_instantaneous_frequency_sweeps_band(table1):
    grid = TimeGrid.from_config(table1)
    echo = siggen.gen_echo(table1.waveform, table1.target, grid)
    on = np.flatnonzero(np.abs(echo.samples) > 0)
    ph = np.unwrap(np.angle(echo.samples[on]))
    f = np.diff(ph) / (2 * np.pi * echo.dt)
    assert f[0] == pytest.approx(-50e6, abs=1e6)
    assert f[-1] == pytest.approx(50e6, abs=1e6)
    assert np.polyfit(echo.times[on][:-1], f, 1)[0] == pytest.approx(1e14, rel=1e-6)


def test_pulse_train_slices():
    grid = TimeGrid(0.0, 400, 200e6)
    env = siggen.gen_pulse_train(0.125e-6, 0.1875e-6, 6, 0.1e-6, grid).samples.real
    edges = np.flatnonzero(np.diff(env) > 0)
    assert edges.size == 6
    assert env.sum() == 6 * 25
    with pytest.raises(ValueError):
        siggen.gen_pulse_train(0.2e-6, 0.1e-6, 2, 0.0, grid)


def test_isrj_is_gated_shifted_pulse(table1):
    grid = TimeGrid.from_config(table1)
    jam = table1.jammers[0]
    j = siggen.gen_isrj(table1.waveform, jam, grid)
    on = np.abs(j.samples) > 0
    # five full 25-sample slices plus a sixth cut to 12 samples by the pulse end
    assert on.sum() == 5 * 25 + 12
    assert np.allclose(np.abs(j.samples[on]), jam.amplitude)


def test_noise_variance_and_seed(table1):
    grid = TimeGrid.from_config(table1)
    a = siggen.gen_noise(table1.noise, grid, seed=3).samples
    b = siggen.gen_noise(table1.noise, grid, seed=3).samples
    c = siggen.gen_noise(table1.noise, grid, seed=4).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.var(a) == pytest.approx(table1.noise.variance, rel=0.05)


def test_simulate_composes_components(table2):
    s = siggen.simulate(table2, seed=5)
    assert len(s.jamming) == 2
    total = s.echo.samples + sum(j.samples for j in s.jamming) + s.noise.samples
    assert np.allclose(s.received.samples, total)
    assert np.allclose(s.clean.samples, total - s.noise.samples)


def test_compose_rejects_mismatched_grids():
    a = ComplexSignal(np.ones(4), 1.0)
    b = ComplexSignal(np.ones(5), 1.0)
    with pytest.raises(ValueError):
        siggen.compose_received(a, [b])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=40))
def test_bin_and_csv_round_trip(tmp_path_factory, values):
    d = tmp_path_factory.mktemp("sig")
    s = ComplexSignal(np.array(values), 200e6, 1e-6)
    siggen.write_signal_bin(d / "s.bin", s)
    raw = (d / "s.bin").read_bytes()
    assert int.from_bytes(raw[:8], "little") == len(values)
    back = siggen.read_signal_bin(d / "s.bin", 200e6, 1e-6)
    assert np.array_equal(back.samples, s.samples)
    siggen.write_signal_csv(d / "s.csv", s)
    assert (d / "s.csv").read_text().splitlines()[0] == "t_s,re,im"
    assert np.array_equal(siggen.read_signal_csv(d / "s.csv").samples, s.samples)


def test_truncated_bin_rejected(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes((10).to_bytes(8, "little") + b"\x00" * 16)
    with pytest.raises(ValueError):
        siggen.read_signal_bin(p, 1.0)
