"""Scenario configuration and physical unit conversions.

A scenario is described by a line-oriented ``key = value`` text file with SI
units. Blank lines and ``#`` comments are ignored. Jammers are numbered
``jammer.1``, ``jammer.2``, ... and each carries its own SJR.

Example
-------
>>> cfg = parse_config(TABLE1_TEXT)          # doctest: +SKIP
>>> cfg.target.delay_s                       # doctest: +SKIP
6.004153713566737e-06
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

SPEED_OF_LIGHT = 299792458.0  # m/s


class ConfigError(ValueError):
    """Raised for a malformed or inconsistent scenario configuration.

    The offending key is available as ``err.key``.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def range_to_delay(range_m: float) -> float:
    """Two-way propagation delay in seconds for a target at ``range_m``."""
    if range_m < 0:
        raise ValueError(f"range must be nonnegative, got {range_m}")
    return 2.0 * range_m / SPEED_OF_LIGHT


def delay_to_range(delay_s):
    """Range in meters for a two-way delay (scalar or array)."""
    if isinstance(delay_s, (int, float)) and delay_s < 0:
        raise ValueError(f"delay must be nonnegative, got {delay_s}")
    return delay_s * SPEED_OF_LIGHT / 2.0


@dataclass(frozen=True)
class WaveformParams:
    pulse_width_s: float  # Tp
    bandwidth_hz: float  # B
    carrier_hz: float  # fc
    prf_hz: float
    sample_rate_hz: float  # fs

    def __post_init__(self):
        if not self.pulse_width_s > 0:
            raise ConfigError("pulse_width_s", "must be > 0")
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth_hz", "must be > 0")
        if not self.prf_hz > 0:
            raise ConfigError("prf_hz", "must be > 0")
        if not self.sample_rate_hz >= 2 * self.bandwidth_hz:
            raise ConfigError("sample_rate_hz", "must be at least twice bandwidth_hz")

    @property
    def chirp_rate(self) -> float:
        """Chirp rate k = B / Tp in Hz/s."""
        return self.bandwidth_hz / self.pulse_width_s

    @property
    def n_quadratic(self) -> float:
        """Quadratic phase coefficient n = pi k (rad/s^2) of exp(i(mt + nt^2))."""
        return math.pi * self.chirp_rate


@dataclass(frozen=True)
class TargetParams:
    range_m: float
    amplitude: float = 1.0  # A_t

    def __post_init__(self):
        if self.range_m < 0:
            raise ConfigError("target_range_m", "must be >= 0")

    @property
    def delay_s(self) -> float:
        return range_to_delay(self.range_m)


@dataclass(frozen=True)
class JammerParams:
    delay_s: float  # tau_j
    slice_width_s: float  # T_j
    sample_period_s: float  # T_s
    n_slices: int  # N
    amplitude: float  # A_j
    freq_shift_hz: float  # f1

    def __post_init__(self):
        if not self.slice_width_s > 0:
            raise ConfigError("slice_width_s", "must be > 0")
        if self.slice_width_s > self.sample_period_s:
            raise ConfigError("slice_width_s", "must not exceed sample_period_s")
        if self.n_slices < 1:
            raise ConfigError("n_slices", "must be >= 1")
        if self.delay_s < 0:
            raise ConfigError("delay_s", "must be >= 0")

    @property
    def duty_cycle(self) -> float:
        return self.slice_width_s / self.sample_period_s

    def false_target_offset_m(self, chirp_rate: float) -> float:
        """Range offset of the main false target produced by the frequency shift.

        A shift f1 moves the compressed peak by -f1/k in delay, i.e. by
        -f1/k * c/2 in range, on top of the jammer's own delay.
        """
        return -self.freq_shift_hz / chirp_rate * SPEED_OF_LIGHT / 2.0


@dataclass(frozen=True)
class NoiseModel:
    snr_db: float  # in-pulse SNR against the target pulse
    sigma: float  # per-sample standard deviation of complex noise
    seed: int
    sample_rate_hz: float

    @property
    def variance(self) -> float:
        return self.sigma**2

    @property
    def psd(self) -> float:
        """Two-sided noise power spectral density D = sigma^2 / fs (V^2/Hz)."""
        return self.variance / self.sample_rate_hz


@dataclass(frozen=True)
class ScenarioConfig:
    waveform: WaveformParams
    target: TargetParams
    jammers: Tuple[JammerParams, ...]
    noise: NoiseModel
    sjr_db: Tuple[float, ...]
    window_s: float = 10e-6  # simulated span of the range window
    window_start_s: float = 0.0

    def __post_init__(self):
        if len(self.sjr_db) != len(self.jammers):
            raise ConfigError("sjr_db", "one value per jammer is required")
        if self.window_s < self.waveform.pulse_width_s:
            raise ConfigError("window_s", "must cover at least one pulse")

    @property
    def false_target_ranges_m(self) -> List[float]:
        k = self.waveform.chirp_rate
        return [delay_to_range(j.delay_s) + j.false_target_offset_m(k) for j in self.jammers]

    def with_overrides(self, **kw) -> "ScenarioConfig":
        """Return a copy with top-level scalar knobs replaced.

        Supported keys: ``snr_db``, ``seed``, ``sjr_db`` (scalar applied to every
        jammer, or a sequence). Amplitudes and noise are rederived.
        """
        values = to_mapping(self)
        if "snr_db" in kw:
            values["snr_db"] = kw["snr_db"]
        if "seed" in kw:
            values["seed"] = int(kw["seed"])
        if "sjr_db" in kw:
            sjr = kw["sjr_db"]
            sjr = [sjr] * len(self.jammers) if isinstance(sjr, (int, float)) else list(sjr)
            for i, s in enumerate(sjr, start=1):
                values[f"jammer.{i}.sjr_db"] = s
        return from_mapping(values)


def amplitudes_from_ratios(sjr_db, snr_db: float, waveform: WaveformParams | None = None,
                           target_amplitude: float = 1.0):
    """Convert dB ratios into signal amplitudes and noise standard deviation.

    Parameters
    ----------
    sjr_db : float or sequence of float
        Signal-to-jamming ratio per jammer, ``20 log10(A_t / A_j)``.
    snr_db : float
        In-pulse SNR. The noise variance is chosen so that a unit-power target
        pulse sits ``snr_db`` above the per-sample noise power.
    waveform : WaveformParams, optional
        Unused by the conversion itself; accepted so callers can pass the
        scenario waveform uniformly.
    target_amplitude : float
        A_t. The noise is referenced to the target's pulse power A_t^2.

    Returns
    -------
    (A_t, A_j, sigma)
        ``A_j`` is a float for scalar ``sjr_db`` and a list otherwise.
    """
    a_t = float(target_amplitude)
    if isinstance(sjr_db, (int, float)):
        a_j = a_t * 10.0 ** (-sjr_db / 20.0)
    else:
        a_j = [a_t * 10.0 ** (-s / 20.0) for s in sjr_db]
    variance = a_t**2 * 10.0 ** (-snr_db / 10.0)
    return a_t, a_j, math.sqrt(variance)


# ---------------------------------------------------------------------------
# key = value schema

_WAVEFORM_KEYS = ("pulse_width_s", "bandwidth_hz", "carrier_hz", "prf_hz", "sample_rate_hz")
_JAMMER_KEYS = ("delay_s", "slice_width_s", "sample_period_s", "n_slices", "freq_shift_hz", "sjr_db")
_TOP_REQUIRED = _WAVEFORM_KEYS + ("target_range_m", "snr_db", "seed")
_TOP_OPTIONAL = {"target_amplitude": 1.0, "window_s": 10e-6, "window_start_s": 0.0}
_JAMMER_RE = re.compile(r"^jammer\.(\d+)\.([a-z_]+)$")


def parse_text(text: str) -> Dict[str, str]:
    """Split ``key = value`` lines into a dict of raw strings."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


def _number(key: str, raw, integer: bool = False):
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"not a number: {raw!r}") from None
    if not math.isfinite(val):
        raise ConfigError(key, f"not finite: {raw!r}")
    if integer:
        if val != int(val):
            raise ConfigError(key, f"not an integer: {raw!r}")
        return int(val)
    return val


def from_mapping(values: Dict[str, object]) -> ScenarioConfig:
    """Build a validated ScenarioConfig from raw key/value pairs."""
    for key in _TOP_REQUIRED:
        if key not in values:
            raise ConfigError(key, "missing key")
    jam_fields: Dict[int, Dict[str, object]] = {}
    for key, raw in values.items():
        m = _JAMMER_RE.match(key)
        if m:
            idx, name = int(m.group(1)), m.group(2)
            if name not in _JAMMER_KEYS:
                raise ConfigError(key, "unknown jammer key")
            jam_fields.setdefault(idx, {})[name] = raw
        elif key not in _TOP_REQUIRED and key not in _TOP_OPTIONAL:
            raise ConfigError(key, "unknown key")
    if jam_fields and sorted(jam_fields) != list(range(1, len(jam_fields) + 1)):
        raise ConfigError("jammer", "jammers must be numbered 1..N without gaps")

    num = {k: _number(k, values[k]) for k in _WAVEFORM_KEYS}
    waveform = WaveformParams(**num)
    snr_db = _number("snr_db", values["snr_db"])
    seed = _number("seed", values["seed"], integer=True)
    t_amp = _number("target_amplitude", values.get("target_amplitude", _TOP_OPTIONAL["target_amplitude"]))
    target = TargetParams(range_m=_number("target_range_m", values["target_range_m"]), amplitude=t_amp)

    jammers, sjrs = [], []
    for idx in sorted(jam_fields):
        raw = jam_fields[idx]
        prefix = f"jammer.{idx}."
        for name in _JAMMER_KEYS:
            if name not in raw:
                raise ConfigError(prefix + name, "missing key")
        sjr = _number(prefix + "sjr_db", raw["sjr_db"])
        _, a_j, _ = amplitudes_from_ratios(sjr, snr_db, waveform, t_amp)
        try:
            jammers.append(JammerParams(
                delay_s=_number(prefix + "delay_s", raw["delay_s"]),
                slice_width_s=_number(prefix + "slice_width_s", raw["slice_width_s"]),
                sample_period_s=_number(prefix + "sample_period_s", raw["sample_period_s"]),
                n_slices=_number(prefix + "n_slices", raw["n_slices"], integer=True),
                amplitude=a_j,
                freq_shift_hz=_number(prefix + "freq_shift_hz", raw["freq_shift_hz"]),
            ))
        except ConfigError as err:
            raise ConfigError(prefix + err.key, str(err).split(": ", 1)[1]) from None
        sjrs.append(sjr)

    _, _, sigma = amplitudes_from_ratios(0.0, snr_db, waveform, t_amp)
    noise = NoiseModel(snr_db=snr_db, sigma=sigma, seed=seed, sample_rate_hz=waveform.sample_rate_hz)
    return ScenarioConfig(
        waveform=waveform,
        target=target,
        jammers=tuple(jammers),
        noise=noise,
        sjr_db=tuple(sjrs),
        window_s=_number("window_s", values.get("window_s", _TOP_OPTIONAL["window_s"])),
        window_start_s=_number("window_start_s", values.get("window_start_s", _TOP_OPTIONAL["window_start_s"])),
    )


def to_mapping(cfg: ScenarioConfig) -> Dict[str, object]:
    """Inverse of :func:`from_mapping` (stored fields only)."""
    w = cfg.waveform
    out: Dict[str, object] = {
        "pulse_width_s": w.pulse_width_s,
        "bandwidth_hz": w.bandwidth_hz,
        "carrier_hz": w.carrier_hz,
        "prf_hz": w.prf_hz,
        "sample_rate_hz": w.sample_rate_hz,
        "target_range_m": cfg.target.range_m,
        "target_amplitude": cfg.target.amplitude,
        "snr_db": cfg.noise.snr_db,
        "seed": cfg.noise.seed,
        "window_s": cfg.window_s,
        "window_start_s": cfg.window_start_s,
    }
    for i, (j, sjr) in enumerate(zip(cfg.jammers, cfg.sjr_db), start=1):
        p = f"jammer.{i}."
        out[p + "delay_s"] = j.delay_s
        out[p + "slice_width_s"] = j.slice_width_s
        out[p + "sample_period_s"] = j.sample_period_s
        out[p + "n_slices"] = j.n_slices
        out[p + "freq_shift_hz"] = j.freq_shift_hz
        out[p + "sjr_db"] = sjr
    return out


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize to the ``key = value`` schema using round-trip exact floats."""
    lines = []
    for key, val in to_mapping(cfg).items():
        lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> ScenarioConfig:
    return from_mapping(parse_text(text))


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Raises
    ------
    ConfigError
        Missing key, non-numeric value or invariant violation; the message
        and ``err.key`` name the offending key.
    OSError
        The file cannot be read.
    """
    return parse_config(Path(path).read_text())


def bundled_config_path(name: str) -> Path:
    """Path of a scenario file shipped with the package (``table1``, ``table2``)."""
    return Path(__file__).with_name("data") / f"{name}.cfg"
