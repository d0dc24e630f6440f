"""Mask filtering, pulse compression, CFAR and suppression metrics.

The detected target ridge defines a band mask in the STFT domain; the
received signal is filtered by masking its STFT and resynthesizing. Range
profiles come from matched filtering against the transmitted pulse and are
thresholded by a cell-averaging CFAR detector.

Metrics compare peak magnitudes near the true and false-target ranges before
and after suppression:

    SJR   = 20 log10(A_s / A_j)
    SJRIF = 20 log10(As_after / Aj_after) - 20 log10(A_s / A_j)
    SLR   = 20 log10(As_after / A_s)

so a signal loss shows up as a negative SLR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import correlate

from .scenario import SPEED_OF_LIGHT
from .siggen import ComplexSignal
from .tfr import StftFrameSet, istft, stft

PEAK_SEARCH_BINS = 3


# ---------------------------------------------------------------------------
# mask and filtering


@dataclass
class TfMask:
    """Binary band mask aligned to an STFT frame set.

    ``line`` is the (t1, u1, t2, u2) ridge in seconds and Hz it was built from.
    """

    grid: np.ndarray
    line: tuple
    width_bins: float
    window_len: int
    hop: int

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if not np.all((self.grid == 0) | (self.grid == 1)):
            raise ValueError("mask entries must be 0 or 1")

    @property
    def shape(self):
        return self.grid.shape


def build_mask(line, frames: StftFrameSet, width_bins: float = 7) -> TfMask:
    """Ones within ``width_bins / 2`` STFT bins of the line, for frames in [t1, t2].

    ``line`` needs ``t1, u1, t2, u2`` attributes in seconds and Hz. A bin is
    kept when its distance from the line's frequency at the frame time is
    strictly less than half the width.

    Raises
    ------
    ValueError
        If the line's time span misses every frame or its frequencies leave
        the STFT band.
    """
    if width_bins <= 0:
        raise ValueError("width_bins must be > 0")
    times = frames.times_s
    freqs = frames.freqs_hz
    df = freqs[1] - freqs[0]
    t1, u1, t2, u2 = float(line.t1), float(line.u1), float(line.t2), float(line.u2)
    cols = np.nonzero((times >= t1 - 1e-15) & (times <= t2 + 1e-15))[0]
    if cols.size == 0:
        raise ValueError("line lies outside the frame times")
    k = (u2 - u1) / (t2 - t1)
    centre = u1 + k * (times[cols] - t1)
    if np.any(centre < freqs[0] - df / 2) or np.any(centre > freqs[-1] + df / 2):
        raise ValueError("line leaves the STFT frequency range")
    dist = (freqs[:, None] - centre[None, :]) / df
    grid = np.zeros(frames.frames.shape)
    grid[:, cols] = (np.abs(dist) < width_bins / 2.0 - 1e-9).astype(float)
    return TfMask(grid, (t1, u1, t2, u2), width_bins, frames.window_len, frames.hop)


def filter_stft(received: ComplexSignal, mask: TfMask) -> ComplexSignal:
    """ISTFT of the masked STFT of ``received``.

    Raises
    ------
    ValueError
        If the mask does not match the received signal's frame grid.
    """
    frames = stft(received, window_len=mask.window_len, hop=mask.hop)
    if frames.frames.shape != mask.shape:
        raise ValueError(f"mask shape {mask.shape} differs from frames {frames.frames.shape}")
    return istft(frames.like(frames.frames * mask.grid))


# ---------------------------------------------------------------------------
# range profiles


@dataclass
class RangeProfile:
    """Matched-filter output magnitude on a uniform range axis."""

    magnitudes: np.ndarray
    range0_m: float
    range_step_m: float

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        if np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be nonnegative")
        if not self.range_step_m > 0:
            raise ValueError("range axis must increase")

    @property
    def n(self) -> int:
        return self.magnitudes.size

    @property
    def ranges_m(self) -> np.ndarray:
        return self.range0_m + self.range_step_m * np.arange(self.n)

    def bin_of(self, range_m: float) -> int:
        return int(round((range_m - self.range0_m) / self.range_step_m))

    def magnitude_db(self, floor: float = 1e-300) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(self.magnitudes, floor))

    def peak_near(self, range_m: float, bins: int = PEAK_SEARCH_BINS) -> float:
        """Largest magnitude within ``bins`` cells of ``range_m``.

        Raises
        ------
        ValueError
            If ``range_m`` lies outside the profile.
        """
        i = self.bin_of(range_m)
        if not 0 <= i < self.n:
            raise ValueError(f"range {range_m} m lies outside the profile")
        return float(self.magnitudes[max(0, i - bins):i + bins + 1].max())


def pulse_compress(received: ComplexSignal, reference: ComplexSignal) -> RangeProfile:
    """Matched filter: correlation magnitude against the reference pulse.

    Lag ``l`` (samples) maps to delay ``received.start + l dt - reference.start``
    and range ``c delay / 2``; only lags inside the received window are kept.

    Raises
    ------
    ValueError
        If the reference is longer than the received signal or on a different
        sample rate.
    """
    if reference.n > received.n:
        raise ValueError("reference longer than received signal")
    if not math.isclose(reference.sample_rate_hz, received.sample_rate_hz, rel_tol=1e-12):
        raise ValueError("reference and received sample rates differ")
    full = correlate(received.samples, reference.samples, mode="full", method="fft")
    lags = full[reference.n - 1:]
    delay0 = received.start_time_s - reference.start_time_s
    step = SPEED_OF_LIGHT * received.dt / 2.0
    return RangeProfile(np.abs(lags), SPEED_OF_LIGHT * delay0 / 2.0, step)


def write_profile_csv(path, profile: RangeProfile) -> None:
    data = np.column_stack([profile.ranges_m, profile.magnitude_db()])
    np.savetxt(path, data, delimiter=",", header="range_m,magnitude_db", comments="", fmt="%.17g")


# ---------------------------------------------------------------------------
# CFAR


@dataclass(frozen=True)
class CfarConfig:
    """Cell-averaging CFAR settings (cells per side)."""

    training: int = 16
    guard: int = 4
    pfa: float = 1e-4

    def __post_init__(self):
        if self.training < 1 or self.guard < 0:
            raise ValueError("need training >= 1 and guard >= 0")
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")


def cfar_alpha(n_training: int, pfa: float) -> float:
    """Threshold factor N (Pfa^(-1/N) - 1) for exponentially distributed power."""
    return n_training * (pfa ** (-1.0 / n_training) - 1.0)


def cfar_threshold(profile: RangeProfile, config: CfarConfig):
    """Per-cell power threshold; cells near the ends use the training cells they have.

    Returns ``(power, threshold)``.

    Raises
    ------
    ValueError
        If the profile is shorter than one full CFAR window.
    """
    T, G = config.training, config.guard
    n = profile.n
    if n < 2 * (T + G) + 1:
        raise ValueError("profile shorter than the CFAR window")
    power = profile.magnitudes**2
    csum = np.concatenate([[0.0], np.cumsum(power)])
    idx = np.arange(n)

    def window_sum(lo, hi):  # inclusive, clipped
        lo_c, hi_c = np.clip(lo, 0, n), np.clip(hi + 1, 0, n)
        return np.where(hi_c > lo_c, csum[hi_c] - csum[lo_c], 0.0), np.maximum(hi_c - lo_c, 0)

    ls, ln = window_sum(idx - G - T, idx - G - 1)
    rs, rn = window_sum(idx + G + 1, idx + G + T)
    count = ln + rn
    alpha = count * (config.pfa ** (-1.0 / np.maximum(count, 1)) - 1.0)
    mean = (ls + rs) / np.maximum(count, 1)
    return power, alpha * mean


def cfar_cells(profile: RangeProfile, config: CfarConfig) -> np.ndarray:
    """Boolean per-cell decisions (power above threshold)."""
    power, thr = cfar_threshold(profile, config)
    return power > thr


def cfar_detect(profile: RangeProfile, config: Optional[CfarConfig] = None):
    """Detections as ``(range_m, magnitude)``, one per run of exceeding cells.

    Adjacent exceeding cells (a main lobe) are reported once, at their peak.
    """
    config = CfarConfig() if config is None else config
    hit = cfar_cells(profile, config)
    out = []
    i, n = 0, profile.n
    mags = profile.magnitudes
    r = profile.ranges_m
    while i < n:
        if hit[i]:
            j = i
            while j + 1 < n and hit[j + 1]:
                j += 1
            p = i + int(np.argmax(mags[i:j + 1]))
            out.append((float(r[p]), float(mags[p])))
            i = j + 1
        else:
            i += 1
    return out


def write_detections_csv(path, detections) -> None:
    data = np.array(detections, dtype=float).reshape(-1, 2)
    np.savetxt(path, data, delimiter=",", header="range_m,magnitude", comments="", fmt="%.17g")


# ---------------------------------------------------------------------------
# metrics


@dataclass
class SuppressionReport:
    """Suppression metrics for one run.

    ``sjr_*``, ``sjrif_db`` are None when there is no false target. The
    residual of each false target is its after-suppression peak relative to
    the target's before-suppression peak.
    """

    sjr_before_db: Optional[float]
    sjr_after_db: Optional[float]
    sjrif_db: Optional[float]
    slr_db: float
    target_range_m: float
    detected_target_range_m: Optional[float] = None
    false_target_ranges_m: Sequence[float] = ()
    false_target_residual_db: Sequence[float] = ()
    extra: dict = field(default_factory=dict)

    @property
    def no_false_target(self) -> bool:
        return len(self.false_target_ranges_m) == 0

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "none"
            if isinstance(v, (list, tuple)):
                return ",".join(fmt(x) for x in v) if v else "none"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        lines = [
            f"sjr_before_db: {fmt(self.sjr_before_db)}",
            f"sjr_after_db: {fmt(self.sjr_after_db)}",
            f"sjrif_db: {fmt(self.sjrif_db)}",
            f"slr_db: {fmt(self.slr_db)}",
            f"target_range_m: {fmt(self.target_range_m)}",
            f"detected_target_range_m: {fmt(self.detected_target_range_m)}",
            f"false_target_ranges_m: {fmt(list(self.false_target_ranges_m))}",
            f"false_target_residual_db: {fmt(list(self.false_target_residual_db))}",
            f"no_false_target: {str(self.no_false_target).lower()}",
        ]
        lines += [f"{k}: {fmt(v)}" for k, v in self.extra.items()]
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Read ``key: value`` lines back into a dict of strings."""
    out = {}
    for line in text.splitlines():
        if ":" in line and not line.startswith("#"):
            k, v = line.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def _db_ratio(num: float, den: float) -> float:
    """20 log10(num / den) with +-inf for vanishing terms (nan if both vanish)."""
    if num > 0 and den > 0:
        return 20.0 * math.log10(num / den)
    if num > 0:
        return math.inf
    if den > 0:
        return -math.inf
    return math.nan


def metrics(before: RangeProfile, after: RangeProfile, target_range_m: float,
            false_ranges_m: Sequence[float] = (), detected_target_range_m: Optional[float] = None
            ) -> SuppressionReport:
    """Peak-based SJR, SJRIF and SLR.

    Peaks are the maxima within three bins of each truth range. With several
    false targets, ``A_j`` is the strongest false-target peak (before and
    after are each taken as the maximum over the false targets).
    """
    a_s = before.peak_near(target_range_m)
    as_bar = after.peak_near(target_range_m)
    slr = _db_ratio(as_bar, a_s)
    if len(false_ranges_m) == 0:
        return SuppressionReport(None, None, None, slr, target_range_m, detected_target_range_m)
    a_j = max(before.peak_near(r) for r in false_ranges_m)
    aj_bar_each = [after.peak_near(r) for r in false_ranges_m]
    aj_bar = max(aj_bar_each)
    sjr_b = _db_ratio(a_s, a_j)
    sjr_a = _db_ratio(as_bar, aj_bar)
    resid = [_db_ratio(v, a_s) for v in aj_bar_each]
    return SuppressionReport(sjr_b, sjr_a, sjr_a - sjr_b, slr, target_range_m, detected_target_range_m,
                             list(false_ranges_m), resid)


# ---------------------------------------------------------------------------
# energy-function baseline


@dataclass(frozen=True)
class EnergyBaselineConfig:
    """Sliding-window energy detector settings.

    A sample is zeroed when the mean power of the window centred on it exceeds
    ``max(factor * median, floor_frac * max)`` of that energy function.
    """

    window: int = 8
    factor: float = 4.0
    floor_frac: float = 0.25


def baseline_energy_function(received: ComplexSignal, config: Optional[EnergyBaselineConfig] = None
                             ) -> ComplexSignal:
    """Zero high-energy samples, treating them as jamming slices."""
    config = EnergyBaselineConfig() if config is None else config
    power = np.abs(received.samples) ** 2
    if not power.any():
        return received.like(np.zeros(received.n, dtype=np.complex128))
    energy = uniform_filter1d(power, size=config.window, mode="constant")
    thr = max(config.factor * float(np.median(energy)), config.floor_frac * float(energy.max()))
    return received.like(np.where(energy > thr, 0.0, received.samples))
