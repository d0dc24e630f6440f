"""Complex-baseband waveform generation: LFM pulse, target echo, ISRJ, noise.

The carrier is never sampled. A delayed copy of the transmitted pulse picks up
the scalar carrier phase ``exp(-j 2 pi fc tau)`` and is otherwise the baseband
chirp ``exp(j pi k t^2)`` centred on the pulse midpoint.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .scenario import JammerParams, NoiseModel, ScenarioConfig, TargetParams, WaveformParams

# Sample-index slack used when deciding whether a grid point falls inside a
# rectangle, so that edges landing exactly on a sample are not lost to rounding.
_EDGE_TOL = 1e-7


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex sequence.

    The axis is normally time in seconds, but LCT-domain outputs reuse the
    same container with ``sample_rate_hz`` meaning ``1 / du``.
    """

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("samples must be a nonempty 1-D sequence")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.n) * self.dt

    @property
    def energy(self) -> float:
        """Discrete energy sum |x|^2 (no dt factor)."""
        return float(np.vdot(self.samples, self.samples).real)

    def like(self, samples) -> "ComplexSignal":
        """New signal on the same grid."""
        return ComplexSignal(samples, self.sample_rate_hz, self.start_time_s)

    def same_grid(self, other: "ComplexSignal") -> bool:
        return (self.n == other.n and np.isclose(self.sample_rate_hz, other.sample_rate_hz, rtol=1e-12)
                and abs(self.start_time_s - other.start_time_s) <= 1e-6 * self.dt)


@dataclass(frozen=True)
class TimeGrid:
    """Sampling grid of the simulated range window."""

    start_s: float
    n_samples: int
    sample_rate_hz: float

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "TimeGrid":
        fs = cfg.waveform.sample_rate_hz
        return cls(cfg.window_start_s, int(round(cfg.window_s * fs)), fs)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.start_s + np.arange(self.n_samples) * self.dt

    @property
    def end_s(self) -> float:
        return self.start_s + self.n_samples * self.dt


@dataclass(frozen=True)
class AnalyticLfm:
    """Infinite chirp exp(i(m t + n t^2)) used by the ridge theory.

    For a scenario waveform, ``n = pi k`` and ``m = 2 pi f`` where ``f`` is the
    baseband frequency at ``t = 0``.
    """

    m: float
    n: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * (self.m * t + self.n * t * t))

    def inst_freq(self, t):
        """Instantaneous angular frequency m + 2 n t."""
        return self.m + 2.0 * self.n * np.asarray(t, dtype=float)


def _in_interval(t, lo, width, dt):
    """Mask of grid times with lo <= t < lo + width, tolerant to rounding."""
    pos = (np.asarray(t) - lo) / dt
    return (pos >= -_EDGE_TOL) & (pos < width / dt - _EDGE_TOL)


def _chirp(t_local, k):
    return np.exp(1j * np.pi * k * t_local * t_local)


def _grid(window, waveform: WaveformParams) -> TimeGrid:
    if isinstance(window, TimeGrid):
        return window
    fs = waveform.sample_rate_hz
    return TimeGrid(0.0, int(round(float(window) * fs)), fs)


def gen_lfm(waveform: WaveformParams, duration_window_s: float) -> ComplexSignal:
    """Transmitted pulse rect(t/Tp) exp(j pi k t^2) at the start of a window.

    The pulse occupies the first ``round(Tp fs)`` samples. Its local time runs
    from ``-Tp/2`` so the phase is zero at the pulse midpoint.

    Raises
    ------
    ValueError
        If the window is shorter than the pulse.
    """
    if duration_window_s < waveform.pulse_width_s * (1 - 1e-12):
        raise ValueError("window shorter than pulse")
    grid = _grid(duration_window_s, waveform)
    return _delayed_pulse(waveform, grid, 0.0)


def _delayed_pulse(waveform: WaveformParams, grid: TimeGrid, delay_s: float) -> ComplexSignal:
    t = grid.times
    tp = waveform.pulse_width_s
    inside = _in_interval(t, delay_s, tp, grid.dt)
    out = np.zeros(grid.n_samples, dtype=np.complex128)
    local = t[inside] - delay_s - tp / 2.0
    out[inside] = _chirp(local, waveform.chirp_rate)
    return ComplexSignal(out, grid.sample_rate_hz, grid.start_s)


def reference_pulse(waveform: WaveformParams) -> ComplexSignal:
    """Just the pulse samples, used as matched-filter reference."""
    n = int(round(waveform.pulse_width_s * waveform.sample_rate_hz))
    dt = 1.0 / waveform.sample_rate_hz
    local = np.arange(n) * dt - waveform.pulse_width_s / 2.0
    return ComplexSignal(_chirp(local, waveform.chirp_rate), waveform.sample_rate_hz, 0.0)


def _check_inside(grid: TimeGrid, lo: float, hi: float, what: str):
    tol = _EDGE_TOL * grid.dt
    if lo < grid.start_s - tol or hi > grid.end_s + tol:
        raise ValueError(f"{what} [{lo:.6g}, {hi:.6g}] s lies outside the window "
                         f"[{grid.start_s:.6g}, {grid.end_s:.6g}] s")


def gen_echo(waveform: WaveformParams, target: TargetParams, window) -> ComplexSignal:
    """Target echo A_t s(t - tau_r) with the carrier phase exp(-j 2 pi fc tau_r)."""
    grid = _grid(window, waveform)
    tau = target.delay_s
    _check_inside(grid, tau, tau + waveform.pulse_width_s, "echo")
    pulse = _delayed_pulse(waveform, grid, tau)
    phase = np.exp(-2j * np.pi * waveform.carrier_hz * tau)
    return pulse.like(target.amplitude * phase * pulse.samples)


def gen_pulse_train(slice_width_s: float, sample_period_s: float, n_slices: int, t0: float,
                    grid: TimeGrid) -> ComplexSignal:
    """0/1 sampling envelope: ``n_slices`` rectangles of width T_j every T_s from t0."""
    if not 0 < slice_width_s <= sample_period_s:
        raise ValueError("need 0 < slice_width_s <= sample_period_s")
    if n_slices < 1:
        raise ValueError("n_slices must be >= 1")
    t = grid.times
    env = np.zeros(grid.n_samples)
    for i in range(n_slices):
        env[_in_interval(t, t0 + i * sample_period_s, slice_width_s, grid.dt)] = 1.0
    return ComplexSignal(env.astype(np.complex128), grid.sample_rate_hz, grid.start_s)


def gen_isrj(waveform: WaveformParams, jammer: JammerParams, window) -> ComplexSignal:
    """Interrupted-sampling repeater jamming.

    The jammer gates the intercepted pulse with its sampling envelope, delays
    it by ``tau_j`` and applies the frequency shift ``exp(j 2 pi f1 t)``. A slice
    cut by the pulse end is kept in truncated form.
    """
    grid = _grid(window, waveform)
    tau = jammer.delay_s
    last_end = tau + (jammer.n_slices - 1) * jammer.sample_period_s + jammer.slice_width_s
    _check_inside(grid, tau, last_end, "jammer slices")
    pulse = _delayed_pulse(waveform, grid, tau).samples
    gate = gen_pulse_train(jammer.slice_width_s, jammer.sample_period_s, jammer.n_slices, tau, grid).samples.real
    shift = np.exp(2j * np.pi * jammer.freq_shift_hz * grid.times)
    phase = np.exp(-2j * np.pi * waveform.carrier_hz * tau)
    return ComplexSignal(jammer.amplitude * phase * pulse * gate * shift, grid.sample_rate_hz, grid.start_s)


def gen_noise(noise: NoiseModel, grid: TimeGrid, seed: int | None = None) -> ComplexSignal:
    """Circular complex Gaussian noise with per-sample variance sigma^2."""
    rng = np.random.default_rng(noise.seed if seed is None else seed)
    w = rng.standard_normal((2, grid.n_samples))
    samples = noise.sigma / np.sqrt(2.0) * (w[0] + 1j * w[1])
    return ComplexSignal(samples, grid.sample_rate_hz, grid.start_s)


def add_awgn(signal: ComplexSignal, noise: NoiseModel, seed: int | None = None) -> ComplexSignal:
    """Add seeded white Gaussian noise. ``sigma == 0`` returns the input values."""
    if noise.sigma == 0:
        return signal.like(signal.samples.copy())
    grid = TimeGrid(signal.start_time_s, signal.n, signal.sample_rate_hz)
    return signal.like(signal.samples + gen_noise(noise, grid, seed).samples)


def compose_received(echo: ComplexSignal, jamming: Iterable[ComplexSignal] = (),
                     noise: ComplexSignal | NoiseModel | None = None, seed: int | None = None) -> ComplexSignal:
    """Pointwise sum r = s_r + sum(j) + n on a shared grid."""
    total = echo.samples.copy()
    for j in jamming:
        if not echo.same_grid(j):
            raise ValueError("jamming signal is on a different sample grid")
        total += j.samples
    out = echo.like(total)
    if isinstance(noise, NoiseModel):
        out = add_awgn(out, noise, seed)
    elif noise is not None:
        if not echo.same_grid(noise):
            raise ValueError("noise signal is on a different sample grid")
        out = out.like(out.samples + noise.samples)
    return out


@dataclass(frozen=True)
class ScenarioSignals:
    """All components of one simulated reception."""

    echo: ComplexSignal
    jamming: tuple
    noise: ComplexSignal
    received: ComplexSignal

    @property
    def clean(self) -> ComplexSignal:
        """Echo plus jamming, without noise."""
        return compose_received(self.echo, self.jamming)


def simulate(cfg: ScenarioConfig, seed: int | None = None) -> ScenarioSignals:
    """Generate echo, jammers and noise for a configuration.

    ``seed`` overrides ``cfg.noise.seed`` (the harness passes per-trial seeds).
    """
    grid = TimeGrid.from_config(cfg)
    echo = gen_echo(cfg.waveform, cfg.target, grid)
    jams = tuple(gen_isrj(cfg.waveform, j, grid) for j in cfg.jammers)
    noise = gen_noise(cfg.noise, grid, seed)
    return ScenarioSignals(echo, jams, noise, compose_received(echo, jams, noise))


# ---------------------------------------------------------------------------
# dump formats


def write_signal_bin(path, signal: ComplexSignal) -> None:
    """Little-endian uint64 sample count followed by interleaved float64 re, im."""
    inter = np.empty(2 * signal.n, dtype="<f8")
    inter[0::2] = signal.samples.real
    inter[1::2] = signal.samples.imag
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", signal.n))
        fh.write(inter.tobytes())


def read_signal_bin(path, sample_rate_hz: float, start_time_s: float = 0.0) -> ComplexSignal:
    """Read :func:`write_signal_bin` output. The format carries no time base."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError("truncated signal file")
    (count,) = struct.unpack("<Q", raw[:8])
    data = np.frombuffer(raw[8:], dtype="<f8")
    if data.size != 2 * count:
        raise ValueError(f"header announces {count} samples, file holds {data.size // 2}")
    return ComplexSignal(data[0::2] + 1j * data[1::2], sample_rate_hz, start_time_s)


def write_signal_csv(path, signal: ComplexSignal) -> None:
    """CSV with header ``t_s,re,im`` and round-trip exact floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "re", "im"])
        for t, v in zip(signal.times, signal.samples):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path) -> ComplexSignal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    fs = 1.0 / (t[1] - t[0]) if t.size > 1 else 1.0
    return ComplexSignal(data[:, 1] + 1j * data[:, 2], fs, float(t[0]))
