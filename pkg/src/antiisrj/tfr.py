"""Time-frequency representations: STFT, Wigner distribution and the GLWD.

Units
-----
GLWD parameter matrices are dimensionless only once time is measured in a
chosen unit ``T_u``. :class:`GlwdParams` carries that unit; its default
``1 / sqrt(2 |n|)`` makes the tuned chirp ``exp(i n t^2)`` have unit sweep
rate (normalized ``n = 1/2``). All GLWD computations run in these normalized
coordinates. Image column axes are reported back in seconds
(``x * T_u``); row axes stay in normalized ``u`` units.

Normalization
-------------
The GLWD carries the kernel prefactors ``1/sqrt(j 2 pi b_i)``, so with the WD
reduction parameters it equals ``WD / (2 pi)`` where the WD is taken without
any prefactor. Tests compare ``2 pi * glwd`` with ``wd``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.signal import ShortTimeFFT, check_COLA, get_window

from . import _backend
from .lct import Grid, LctParams, _pad_and_upsample, kernel_prefactor, lct_forward, mapped_box
from .siggen import ComplexSignal

FEASIBILITY_TOL = 1e-9


class DegenerateParamsError(ValueError):
    """1/b1 + 1/b2 = 0: the ridge and OSNR formulas have no finite value."""


class InfeasiblePreferencesError(ValueError):
    """No parameter set in the preference box satisfies the constraints."""


# ---------------------------------------------------------------------------
# images


@dataclass
class TfImage:
    """Rectangular time-frequency grid with affine axes.

    ``grid[row, col]`` is nonnegative. Column ``j`` sits at ``t0 + j*dt``
    seconds and row ``i`` at ``u0 + i*du`` (Hz for STFT images, normalized LCT
    units for WD/GLWD images). ``values`` optionally keeps the raw complex
    distribution the grid was derived from.
    """

    grid: np.ndarray
    t0: float
    dt: float
    u0: float
    du: float
    source_tag: str
    values: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 2 or self.grid.size == 0:
            raise ValueError("image grid must be a nonempty 2-D array")
        if not np.all(np.isfinite(self.grid)):
            raise ValueError("image grid must be finite")
        if self.dt <= 0 or self.du <= 0:
            raise ValueError("axes must be strictly increasing")
        if self.source_tag not in ("STFT", "WD", "GLWD"):
            raise ValueError(f"unknown source tag {self.source_tag!r}")

    @property
    def shape(self):
        return self.grid.shape

    @property
    def t_axis(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.grid.shape[1])

    @property
    def u_axis(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.grid.shape[0])

    def col_of(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / self.dt

    def row_of(self, u):
        return (np.asarray(u, dtype=float) - self.u0) / self.du

    def t_at(self, col):
        return self.t0 + self.dt * np.asarray(col, dtype=float)

    def u_at(self, row):
        return self.u0 + self.du * np.asarray(row, dtype=float)

    def with_grid(self, grid, **changes) -> "TfImage":
        return replace(self, grid=grid, **changes)


def write_pgm(path, image: TfImage) -> Path:
    """8-bit binary graymap plus a ``.axes`` sidecar with the affine axes.

    Rows are written top to bottom in decreasing ``u`` so that frequency
    increases upward in viewers. Returns the sidecar path.
    """
    path = Path(path)
    g = image.grid
    peak = g.max()
    scaled = np.zeros_like(g) if peak <= 0 else g / peak
    pix = np.clip(np.round(scaled * 255.0), 0, 255).astype(np.uint8)[::-1]
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    side = path.with_name(path.name + ".axes")
    u_top = image.u0 + image.du * (h - 1)
    side.write_text(
        f"source = {image.source_tag}\n"
        f"columns = {w}\nrows = {h}\n"
        f"t_of_column = {image.t0!r} + {image.dt!r} * column\n"
        f"u_of_row = {u_top!r} - {image.du!r} * row\n"
        f"gray_scale_peak = {float(peak)!r}\n"
    )
    return side


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit P5 graymap written by :func:`write_pgm` (rows as stored)."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def write_image_csv(path, image: TfImage) -> None:
    """Long-format CSV ``t,u,magnitude`` (intended for small grids)."""
    tt, uu = np.meshgrid(image.t_axis, image.u_axis)
    data = np.column_stack([tt.ravel(), uu.ravel(), image.grid.ravel()])
    np.savetxt(path, data, delimiter=",", header="t,u,magnitude", comments="", fmt="%.17g")


# ---------------------------------------------------------------------------
# STFT


@dataclass
class StftFrameSet:
    """Two-sided STFT frames (rows: frequency ascending from -fs/2, cols: time)."""

    frames: np.ndarray
    window: np.ndarray
    hop: int
    sample_rate_hz: float
    start_time_s: float
    n_samples: int
    p_min: int

    @property
    def window_len(self) -> int:
        return self.window.size

    @property
    def freqs_hz(self) -> np.ndarray:
        n = self.window.size
        return (np.arange(n) - n // 2) * self.sample_rate_hz / n

    @property
    def times_s(self) -> np.ndarray:
        """Frame centre times."""
        p = self.p_min + np.arange(self.frames.shape[1])
        return self.start_time_s + p * self.hop / self.sample_rate_hz

    def like(self, frames) -> "StftFrameSet":
        return replace(self, frames=np.asarray(frames, dtype=np.complex128))

    def _sft(self) -> ShortTimeFFT:
        return ShortTimeFFT(self.window, self.hop, self.sample_rate_hz, fft_mode="centered")


def stft_window(window_len: int = 64) -> np.ndarray:
    """Periodic Hann taper (COLA at any hop dividing window_len / 2)."""
    return get_window("hann", window_len, fftbins=True)


def stft(signal: ComplexSignal, window_len: int = 64, hop: int = 16, window=None) -> StftFrameSet:
    """Two-sided STFT whose frames cover the whole signal.

    Raises
    ------
    ValueError
        If the window is longer than the signal or violates constant
        overlap-add at the requested hop.
    """
    win = stft_window(window_len) if window is None else np.asarray(window, dtype=float)
    if win.size > signal.n:
        raise ValueError("window longer than signal")
    if not check_COLA(win, win.size, win.size - hop):
        raise ValueError(f"window of length {win.size} is not COLA at hop {hop}")
    sft = ShortTimeFFT(win, hop, signal.sample_rate_hz, fft_mode="centered")
    frames = sft.stft(signal.samples)
    return StftFrameSet(frames, win, hop, signal.sample_rate_hz, signal.start_time_s, signal.n,
                        sft.p_min)


def istft(frames: StftFrameSet) -> ComplexSignal:
    """Inverse of :func:`stft` (least-squares overlap-add)."""
    sft = frames._sft()
    x = sft.istft(frames.frames, k1=frames.n_samples)
    return ComplexSignal(x, frames.sample_rate_hz, frames.start_time_s)


# ---------------------------------------------------------------------------
# Wigner distribution


def upsample2(signal: ComplexSignal) -> ComplexSignal:
    """Band-limited 2x interpolation (zero padded, so no wraparound)."""
    y, t0, dt = _pad_and_upsample(signal.samples, signal.start_time_s, signal.dt, 2)
    return ComplexSignal(y[: 2 * signal.n], 1.0 / dt, t0)


def _normalized(signal: ComplexSignal, time_unit_s: float) -> ComplexSignal:
    return ComplexSignal(signal.samples, signal.sample_rate_hz * time_unit_s,
                         signal.start_time_s / time_unit_s)


def wd(signal: ComplexSignal, n_freq: Optional[int] = None, col_step: int = 1,
       lag_cap_s: Optional[float] = None, time_unit_s: float = 1.0) -> TfImage:
    """Discrete Wigner distribution.

    The signal is interpolated 2x so that lags ``tau = m dt`` land on sample
    pairs; each column sums a symmetric lag window that shrinks at the signal
    edges (never wraps) and is optionally capped at ``lag_cap_s``. The lag
    sum is an FFT, so rows are ``u_k = 2 pi k / (n_freq dt)`` for
    ``k = -n_freq/2 .. n_freq/2 - 1``, in rad per ``time_unit_s``.

    The result is real; ``values`` keeps the (numerically real) complex array
    and ``grid`` its magnitude.
    """
    sig = _normalized(signal, time_unit_s)
    up = upsample2(sig).samples
    n2 = up.size
    dtau = sig.dt
    cols = np.arange(0, n2, 2 * col_step)
    cap = n2 if lag_cap_s is None else int(math.floor(lag_cap_s / time_unit_s / dtau + 1e-9))
    edge = np.minimum(np.minimum(cols, n2 - 1 - cols), cap)
    mmax = int(edge.max())
    if n_freq is None:
        n_freq = max(64, 1 << int(math.ceil(math.log2(2 * mmax + 1))))
    m = np.arange(-mmax, mmax + 1)
    hi = cols[:, None] + m[None, :]
    lo = cols[:, None] - m[None, :]
    ok = np.abs(m)[None, :] <= edge[:, None]
    R = np.where(ok, up[np.clip(hi, 0, n2 - 1)] * np.conj(up[np.clip(lo, 0, n2 - 1)]), 0)
    buf = np.zeros((cols.size, n_freq), dtype=np.complex128)
    np.add.at(buf, (slice(None), m % n_freq), R)
    W = np.fft.fftshift(np.fft.fft(buf, axis=1), axes=1).T * dtau
    du = 2 * np.pi / (n_freq * dtau)
    t0 = sig.start_time_s * time_unit_s
    return TfImage(np.abs(W), t0, col_step * signal.dt, -(n_freq // 2) * du, du, "WD", values=W,
                   meta={"time_unit_s": time_unit_s})


# ---------------------------------------------------------------------------
# GLWD parameters


@dataclass(frozen=True)
class GlwdParams:
    """The four LCT matrices of a GLWD plus the chirp they are tuned to.

    Parameters
    ----------
    B1, B2 : LctParams
        Signal-domain transforms (``g_i = LCT_Bi(f)``).
    A1, A2 : LctParams
        Kernel matrices; both need ``b != 0``.
    chirp_rate_n : float
        Quadratic phase coefficient ``n`` of ``exp(i(mt + nt^2))`` in rad/s^2
        (``pi k`` for a radar chirp of rate k Hz/s).
    time_unit_s : float, optional
        Unit of normalized time; defaults to ``1/sqrt(2|n|)``.
    """

    B1: LctParams
    B2: LctParams
    A1: LctParams
    A2: LctParams
    chirp_rate_n: float
    time_unit_s: Optional[float] = None

    def __post_init__(self):
        if self.time_unit_s is None:
            if self.chirp_rate_n == 0:
                raise ValueError("time_unit_s is required when chirp_rate_n == 0")
            object.__setattr__(self, "time_unit_s", 1.0 / math.sqrt(2.0 * abs(self.chirp_rate_n)))
        if not self.time_unit_s > 0:
            raise ValueError("time_unit_s must be > 0")
        if self.A1.b == 0 or self.A2.b == 0:
            raise ValueError("kernel matrices A1, A2 need b != 0")
        for i in (1, 2):
            if self._inv_h(i) == 0:
                raise ValueError(f"1/h{i} = 2 n bbar{i} + abar{i} vanishes")

    @property
    def n_norm(self) -> float:
        """Chirp coefficient n in normalized time units."""
        return self.chirp_rate_n * self.time_unit_s**2

    def _B(self, i):
        return self.B1 if i == 1 else self.B2

    def _A(self, i):
        return self.A1 if i == 1 else self.A2

    def _inv_h(self, i) -> float:
        B = self._B(i)
        return 2.0 * self.n_norm * B.b + B.a

    @property
    def h1(self) -> float:
        return 1.0 / self._inv_h(1)

    @property
    def h2(self) -> float:
        return 1.0 / self._inv_h(2)

    def signal_chirp_coef(self, i) -> float:
        """x^2 coefficient of LCT_Bi applied to exp(i(mt + nt^2)).

        ``(dbar - h) / (2 bbar)`` for bbar != 0 and its limit
        ``cbar dbar / 2 + n dbar^2`` for the scaling case bbar == 0.
        """
        B = self._B(i)
        h = 1.0 / self._inv_h(i)
        if B.b == 0:
            return 0.5 * B.c * B.d + self.n_norm * B.d**2
        return (B.d - h) / (2.0 * B.b)

    @property
    def l(self) -> float:
        """tau^2 coefficient left in the lag integrand of a matched chirp."""
        c1, c2 = self.signal_chirp_coef(1), self.signal_chirp_coef(2)
        A1, A2 = self.A1, self.A2
        return (c1 - c2) / 4.0 + (A1.a / A1.b - A2.a / A2.b) / 8.0

    @property
    def ridge_feasible(self) -> bool:
        return abs(self.l) <= FEASIBILITY_TOL

    @property
    def S(self) -> float:
        """1/b1 + 1/b2 of the kernel matrices."""
        return 1.0 / self.A1.b + 1.0 / self.A2.b

    def _require_nondegenerate(self):
        if abs(self.S) <= 1e-12 * (1.0 / abs(self.A1.b) + 1.0 / abs(self.A2.b)):
            raise DegenerateParamsError("1/b1 + 1/b2 = 0")

    @property
    def osnr_gain(self) -> float:
        """OSNR relative to the WD: |h1 + h2| / |1/b1 + 1/b2|."""
        self._require_nondegenerate()
        return abs(self.h1 + self.h2) / abs(self.S)

    @property
    def norm_inf(self) -> float:
        return max(M.norm_inf for M in (self.B1, self.B2, self.A1, self.A2))

    @property
    def shared_signal_transform(self) -> bool:
        return self.B1.a == self.B2.a and self.B1.b == self.B2.b

    @classmethod
    def wd_reduction(cls, chirp_rate_n: float, time_unit_s: Optional[float] = None) -> "GlwdParams":
        I, F = LctParams.identity(), LctParams.fourier()
        return cls(I, I, F, F, chirp_rate_n, time_unit_s)

    def describe(self) -> str:
        def fmt(M):
            return f"({M.a:.6g}, {M.b:.6g}; {M.c:.6g}, {M.d:.6g})"
        return (f"B1={fmt(self.B1)} B2={fmt(self.B2)} A1={fmt(self.A1)} A2={fmt(self.A2)} "
                f"n={self.chirp_rate_n:.6g} rad/s^2 T_u={self.time_unit_s:.6g} s "
                f"h1={self.h1:.6g} h2={self.h2:.6g} l={self.l:.3g}")


def ridge_line_theoretical(params: GlwdParams, m: float):
    """Slope and intercept of the GLWD delta line of exp(i(mt + nt^2)).

    Both are in normalized units: ``m`` in rad per time unit, the line is
    ``u = slope * x + intercept`` with ``x`` in time units. Derived from the
    stationary point of the lag integrand:

        slope     = (a1/b1 + a2/b2 + 2 (c_1 + c_2)) / (1/b1 + 1/b2)
        intercept = (h1 + h2) m / (1/b1 + 1/b2)

    where ``c_i`` is :meth:`GlwdParams.signal_chirp_coef`; for bbar_i != 0,
    ``2 c_i = (dbar_i - h_i) / bbar_i``.
    """
    params._require_nondegenerate()
    A1, A2 = params.A1, params.A2
    S = params.S
    slope = (A1.a / A1.b + A2.a / A2.b + 2.0 * (params.signal_chirp_coef(1) + params.signal_chirp_coef(2))) / S
    intercept = (params.h1 + params.h2) * m / S
    return slope, intercept


def osnr_glwd(params: GlwdParams, D: float) -> float:
    """Output SNR ``(2 pi / D) |h1 + h2| / |1/b1 + 1/b2|``.

    ``D`` is the noise PSD per normalized time unit, i.e.
    ``NoiseModel.psd / params.time_unit_s`` (see :func:`psd_normalized`).
    """
    if not D > 0:
        raise ValueError("D must be > 0")
    return 2.0 * np.pi / D * params.osnr_gain


def psd_normalized(psd: float, params: GlwdParams) -> float:
    """Convert a PSD in V^2/Hz to the parameter set's time unit."""
    return psd / params.time_unit_s


def glwd_to_physical(params: GlwdParams, x_s, u):
    """Map GLWD-plane points on a tuned-rate chirp ridge to (t seconds, f Hz).

    Requires ``B1`` and ``B2`` to share ``abar`` and ``bbar`` (every selector
    output does). ``x_s`` is the column coordinate in seconds-equivalent.
    """
    if not params.shared_signal_transform:
        raise ValueError("physical mapping needs B1, B2 with equal abar and bbar")
    T = params.time_unit_s
    x = np.asarray(x_s, dtype=float) / T
    slope, unit = ridge_line_theoretical(params, 1.0)
    m = (np.asarray(u, dtype=float) - slope * x) / unit
    t = params.h1 * (x - params.B1.b * m)
    omega = m + 2.0 * params.n_norm * t
    return t * T, omega / (2.0 * np.pi * T)


def physical_to_glwd(params: GlwdParams, t_s, f_hz):
    """Inverse of :func:`glwd_to_physical`."""
    if not params.shared_signal_transform:
        raise ValueError("physical mapping needs B1, B2 with equal abar and bbar")
    T = params.time_unit_s
    t = np.asarray(t_s, dtype=float) / T
    omega = 2.0 * np.pi * np.asarray(f_hz, dtype=float) * T
    m = omega - 2.0 * params.n_norm * t
    x = t / params.h1 + params.B1.b * m
    slope, unit = ridge_line_theoretical(params, 1.0)
    return x * T, slope * x + unit * m


# ---------------------------------------------------------------------------
# parameter selection


@dataclass(frozen=True)
class SelectorPreferences:
    """Search box for :func:`select_glwd_params`.

    Both signal transforms share ``abar`` and ``bbar``; ``abar`` follows from
    the requested ``h`` via ``1/h = 2 n bbar + abar``. For ``bbar == 0`` the
    free entries are ``cbar1, cbar2`` (from ``cbar_values``); otherwise
    ``dbar1, dbar2`` (from ``dbar_values``). Kernel matrices take ``b_i`` from
    their value lists, ``a2`` and ``d_i`` from theirs; ``a1`` is solved from
    ``l = 0``.
    """

    h_values: Sequence[float] = (1.0,)
    bbar_values: Sequence[float] = (0.0,)
    cbar_values: Sequence[float] = (0.0,)
    dbar_values: Sequence[float] = (1.0,)
    b1_values: Sequence[float] = (1.0, 2.0, 4.0)
    b2_values: Sequence[float] = (1.0, 2.0, 4.0)
    a2_values: Sequence[float] = (0.0,)
    d_values: Sequence[float] = (0.0,)
    min_gain: float = 4.0
    require_dominance: bool = True
    cicfwd_b: float = 1.0
    time_unit_s: Optional[float] = None


def _solve_kernel(a: float, b: float, d: float) -> LctParams:
    return LctParams(a, b, (a * d - 1.0) / b, d)


def select_glwd_params(chirp_rate_n: float, preferences: Optional[SelectorPreferences] = None) -> GlwdParams:
    """Grid search for ridge-feasible GLWD parameters with the best OSNR.

    Every candidate has unit-determinant matrices and ``l = 0`` by
    construction. With ``require_dominance`` the candidate must also beat the
    WD and the CICFWD (``|h1+h2| > |S|`` and ``2/|b_ref| > |S|`` with
    ``S = 1/b1 + 1/b2``). The highest OSNR gain wins; ties go to the smallest
    largest-magnitude entry, then to the lexicographically smallest entries.

    Raises
    ------
    InfeasiblePreferencesError
        No candidate satisfies the constraints, or the best gain is below
        ``preferences.min_gain``.
    """
    p = SelectorPreferences() if preferences is None else preferences
    T = p.time_unit_s if p.time_unit_s is not None else 1.0 / math.sqrt(2.0 * abs(chirp_rate_n))
    n = chirp_rate_n * T * T
    best = None
    for h, bbar in itertools.product(p.h_values, p.bbar_values):
        if h == 0:
            continue
        abar = 1.0 / h - 2.0 * n * bbar
        if bbar == 0:
            if abar == 0:
                continue
            pairs = [(LctParams(abar, 0.0, c1, 1.0 / abar), LctParams(abar, 0.0, c2, 1.0 / abar))
                     for c1, c2 in itertools.product(p.cbar_values, repeat=2)]
        else:
            pairs = [(LctParams(abar, bbar, (abar * d1 - 1.0) / bbar, d1),
                      LctParams(abar, bbar, (abar * d2 - 1.0) / bbar, d2))
                     for d1, d2 in itertools.product(p.dbar_values, repeat=2)]
        for B1, B2 in pairs:
            probe = GlwdParams(B1, B2, LctParams.fourier(), LctParams.fourier(), chirp_rate_n, T)
            lb = (probe.signal_chirp_coef(1) - probe.signal_chirp_coef(2)) / 4.0
            for b1, b2, a2, d1, d2 in itertools.product(p.b1_values, p.b2_values, p.a2_values,
                                                        p.d_values, p.d_values):
                if b1 == 0 or b2 == 0:
                    continue
                S = 1.0 / b1 + 1.0 / b2
                if abs(S) <= 1e-12:
                    continue
                a1 = b1 * (a2 / b2 - 8.0 * lb)
                cand = GlwdParams(B1, B2, _solve_kernel(a1, b1, d1), _solve_kernel(a2, b2, d2),
                                  chirp_rate_n, T)
                if not cand.ridge_feasible:
                    continue
                hs = abs(cand.h1 + cand.h2)
                if p.require_dominance and not (hs > abs(S) and 2.0 / abs(p.cicfwd_b) > abs(S)):
                    continue
                entries = tuple(v for M in (B1, B2, cand.A1, cand.A2) for v in (M.a, M.b, M.c, M.d))
                key = (-round(cand.osnr_gain, 12), round(cand.norm_inf, 12), entries)
                if best is None or key < best[0]:
                    best = (key, cand)
    if best is None:
        raise InfeasiblePreferencesError("no parameter set in the preference box satisfies the constraints")
    cand = best[1]
    if cand.osnr_gain < p.min_gain * (1 - 1e-12):
        raise InfeasiblePreferencesError(
            f"best OSNR gain {cand.osnr_gain:.4g} is below the requested {p.min_gain:.4g}")
    return cand


# ---------------------------------------------------------------------------
# GLWD


def glwd_x_grid(up: ComplexSignal, params: GlwdParams, band: float) -> Grid:
    """Common LCT-domain grid for both signal transforms.

    Pure scalings with equal ``dbar`` reuse the input samples exactly.
    Otherwise the grid spans both mapped boxes at a step of pi/(2 mu_max),
    the spacing that keeps lag products free of aliasing.
    """
    g = Grid.of(up)
    B1, B2 = params.B1, params.B2
    if B1.b == 0 and B2.b == 0 and B1.d == B2.d:
        pts = g.points / B1.d
        return Grid(float(pts.min()), abs(g.step / B1.d), g.n)
    lo, hi, mu = np.inf, -np.inf, 0.0
    for B in (B1, B2):
        u_lo, u_hi, mu_max = mapped_box(B, g, band)
        lo, hi, mu = min(lo, u_lo), max(hi, u_hi), max(mu, mu_max)
    step = np.pi / (2.0 * mu)
    n = int(math.ceil((hi - lo) / step)) + 1
    return Grid.centered(0.5 * (lo + hi), step, n)


def default_u_grid(params: GlwdParams, x_lo: float, x_hi: float, band_x: float, n_u: int = 256) -> Grid:
    """Rows spanning every u reachable by a stationary lag phase."""
    A1, A2 = params.A1, params.A2
    asum = A1.a / A1.b + A2.a / A2.b
    S = params.S
    us = [(x * asum + 2.0 * w) / S for x in (x_lo, x_hi) for w in (-band_x, band_x)]
    lo, hi = min(us), max(us)
    return Grid(lo, (hi - lo) / (n_u - 1), n_u)


def glwd(signal: ComplexSignal, params: GlwdParams, u_grid: Optional[Grid] = None, n_u: int = 256,
         col_step: int = 2, x_range_s=None, lag_cap_s: Optional[float] = None, lag_caps_s=None) -> TfImage:
    """Generalized linear canonical Wigner distribution.

    Parameters
    ----------
    signal : ComplexSignal
        Input with a time axis in seconds.
    params : GlwdParams
        The four matrices. Infeasible sets (``l != 0``) are computed anyway
        and flagged in ``meta["ridge_feasible"]``.
    u_grid : Grid, optional
        Rows in normalized u units. Defaults to :func:`default_u_grid`.
    col_step : int
        Stride over the common LCT-domain grid (which is 2x oversampled).
    x_range_s : (float, float), optional
        Restrict columns to this seconds-equivalent interval.
    lag_cap_s : float, optional
        Largest |tau| (seconds-equivalent) summed in every column. The lag
        window always shrinks near the grid edges.
    lag_caps_s : ndarray, optional
        Per-pixel caps of shape (rows, columns) overriding ``lag_cap_s``.

    Returns
    -------
    TfImage
        ``values`` holds the complex distribution, ``grid`` its magnitude.

    Raises
    ------
    DegenerateParamsError
        If 1/b1 + 1/b2 = 0.
    """
    params._require_nondegenerate()
    T = params.time_unit_s
    sig = _normalized(signal, T)
    band = np.pi / sig.dt
    up = upsample2(sig)
    xg = glwd_x_grid(up, params, band)
    g1 = lct_forward(up, params.B1, xg, band).samples
    g2 = g1 if params.B2 == params.B1 else lct_forward(up, params.B2, xg, band).samples
    cols = np.arange(0, xg.n, col_step)
    if x_range_s is not None:
        xs = xg.points[cols] * T
        cols = cols[(xs >= x_range_s[0] - 1e-12 * T) & (xs <= x_range_s[1] + 1e-12 * T)]
        if cols.size == 0:
            raise ValueError("x_range_s selects no columns")
    x = xg.points[cols]
    delta = xg.step
    dtau = 2.0 * delta
    if u_grid is None:
        mu = max(mapped_box(B, Grid.of(up), band)[2] for B in (params.B1, params.B2))
        u_grid = default_u_grid(params, x[0], x[-1], mu, n_u)
    u = u_grid.points
    if lag_caps_s is not None:
        caps = np.floor(np.asarray(lag_caps_s, dtype=float) / T / dtau + 1e-9).astype(np.int64)
        if caps.shape != (u.size, cols.size):
            raise ValueError(f"lag_caps_s must have shape {(u.size, cols.size)}")
    else:
        cap = xg.n if lag_cap_s is None else int(math.floor(lag_cap_s / T / dtau + 1e-9))
        caps = np.full((u.size, cols.size), cap, dtype=np.int64)
    caps = np.minimum(np.maximum(caps, 0), xg.n)
    A1, A2 = params.A1, params.A2
    S = params.S
    asum = A1.a / A1.b + A2.a / A2.b
    alpha = (A1.a / A1.b - A2.a / A2.b) / 8.0
    mmax = int(caps.max())
    lag_chirp = np.exp(1j * alpha * (np.arange(mmax + 1) * dtau) ** 2)
    sums = _backend.glwd_lag_sum(g1, g2, cols, caps, -0.5 * S * u, 0.5 * asum * x, lag_chirp, dtau)
    uu = u[:, None]
    xx = x[None, :]
    phase = ((A1.d / (2 * A1.b) - A2.d / (2 * A2.b)) * uu * uu
             - xx * uu * (1.0 / A1.b - 1.0 / A2.b)
             + (A1.a / (2 * A1.b) - A2.a / (2 * A2.b)) * xx * xx)
    pref = kernel_prefactor(A1.b) * np.conj(kernel_prefactor(A2.b))
    values = pref * np.exp(1j * phase) * sums * dtau
    return TfImage(np.abs(values), x[0] * T, col_step * delta * T, u_grid.start, u_grid.step, "GLWD",
                   values=values,
                   meta={"params": params, "ridge_feasible": params.ridge_feasible, "time_unit_s": T,
                         "lag_step": dtau})


def pulse_matched_lag_caps(params: GlwdParams, pulse_width_s: float, bandwidth_hz: float,
                           x_s, u) -> np.ndarray:
    """Per-pixel lag caps matched to a full-band pulse of the tuned chirp rate.

    A pixel on the ridge of a pulse that sweeps the band ``[-B/2, B/2]`` sits
    at the fraction ``(f + B/2)/B`` of that pulse, whatever its delay. Capping
    |tau| at ``2 Tp min(frac, 1 - frac)`` keeps exactly the lag pairs inside
    such a pulse, so summing the distribution along an in-band ridge collects
    every sample pair of the hypothesised pulse once. Pixels outside the band
    get cap 0.

    Returns caps in seconds-equivalent of the column axis, shape (len(u), len(x_s)).
    """
    xx, uu = np.meshgrid(np.asarray(x_s, dtype=float), np.asarray(u, dtype=float))
    _, f = glwd_to_physical(params, xx, uu)
    frac = (f + bandwidth_hz / 2.0) / bandwidth_hz
    cap_t = 2.0 * pulse_width_s * np.clip(np.minimum(frac, 1.0 - frac), 0.0, None)
    return cap_t / abs(params.h1)


# ---------------------------------------------------------------------------
# image analysis helpers


def sample_along_line(image: TfImage, t1: float, u1: float, t2: float, u2: float, values=None):
    """Values on a line at every column whose time lies in [t1, t2].

    Linear interpolation across rows; returns ``(cols, samples)``.
    """
    data = image.grid if values is None else values
    if not t2 > t1:
        raise ValueError("zero-length line")
    c_lo = int(math.ceil(float(image.col_of(t1)) - 1e-9))
    c_hi = int(math.floor(float(image.col_of(t2)) + 1e-9))
    c_lo, c_hi = max(c_lo, 0), min(c_hi, data.shape[1] - 1)
    if c_hi < c_lo:
        raise ValueError("line lies outside the image columns")
    cols = np.arange(c_lo, c_hi + 1)
    t = image.t_at(cols)
    u = u1 + (u2 - u1) * (t - t1) / (t2 - t1)
    r = image.row_of(u)
    nrow = data.shape[0]
    if np.any(r < -0.5) or np.any(r > nrow - 0.5):
        raise ValueError("line leaves the image rows")
    r = np.clip(r, 0, nrow - 1)
    r0 = np.minimum(np.floor(r).astype(int), nrow - 2) if nrow > 1 else np.zeros_like(cols)
    frac = r - r0 if nrow > 1 else np.zeros(cols.size)
    if nrow > 1:
        vals = (1 - frac) * data[r0, cols] + frac * data[r0 + 1, cols]
    else:
        vals = data[0, cols]
    return cols, vals


def tf_continuity_score(image: TfImage, line, threshold_frac: float = 0.5) -> float:
    """Fraction of columns on ``line`` whose magnitude exceeds threshold_frac x line median.

    A continuous ridge scores near 1; a gated or oscillating one (ISRJ slices,
    cross terms) leaves gaps and scores lower. An all-zero line scores 0.

    ``line`` is any object with ``t1, u1, t2, u2`` attributes.
    """
    _, vals = sample_along_line(image, line.t1, line.u1, line.t2, line.u2)
    med = float(np.median(vals))
    return float(np.mean(vals > threshold_frac * med)) if vals.size else 0.0


def rasterize(source, floor_db: float = -60.0, scale: str = "db", part: str = "magnitude") -> TfImage:
    """Normalize frames or a distribution to a [0, 1] image.

    Parameters
    ----------
    source : StftFrameSet or TfImage
    floor_db : float
        Dynamic range for ``scale="db"``: levels ``floor_db`` below the peak
        and lower map to 0, the peak maps to 1.
    scale : {"db", "linear"}
        ``"linear"`` divides by the peak instead (used for detection, where
        line sums of linear magnitudes are what carries the evidence).
    part : {"magnitude", "positive", "real"}
        What is taken from complex ``values``: the modulus; the positive
        part of the real part (the distribution itself for real-valued
        GLWDs, with negative interference lobes clipped); or the real part
        mapped affinely so that its minimum is 0 and its maximum 1. The
        affine map keeps sums along equally long lines in the same order as
        sums of the real part itself.
    """
    if floor_db > 0:
        raise ValueError("floor_db must be <= 0")
    if isinstance(source, StftFrameSet):
        vals = source.frames
        if vals.size == 0:
            raise ValueError("empty input")
        freqs, times = source.freqs_hz, source.times_s
        dt = times[1] - times[0] if times.size > 1 else source.hop / source.sample_rate_hz
        df = freqs[1] - freqs[0]
        base = TfImage(np.abs(vals), times[0], dt, freqs[0], df, "STFT", values=vals)
    elif isinstance(source, TfImage):
        base = source
        vals = source.values if source.values is not None else source.grid
    else:
        raise TypeError("rasterize expects an StftFrameSet or a TfImage")
    if np.size(vals) == 0:
        raise ValueError("empty input")
    if part == "magnitude":
        mag = np.abs(vals)
    elif part == "positive":
        mag = np.maximum(np.real(vals), 0.0)
    elif part == "real":
        re = np.real(vals).astype(float)
        span = float(re.max() - re.min())
        mag = (re - re.min()) / span if span > 0 else np.zeros(re.shape)
    else:
        raise ValueError(f"unknown part {part!r}")
    peak = float(mag.max())
    if peak <= 0:
        out = np.zeros_like(mag, dtype=float)
    elif scale == "linear":
        out = mag / peak
    elif scale == "db":
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag / peak)
        out = np.clip((db - floor_db) / (-floor_db), 0.0, 1.0) if floor_db < 0 else (mag >= peak).astype(float)
    else:
        raise ValueError(f"unknown scale {scale!r}")
    return base.with_grid(out, meta={**base.meta, "raster": {"scale": scale, "part": part, "floor_db": floor_db}})


# ---------------------------------------------------------------------------
# Monte Carlo OSNR


@dataclass
class OsnrEstimate:
    formula: float  # (2 pi / D) * gain, D per time unit
    empirical: float
    ridge_coefficient: float  # peak / discrete delta height
    noise_mean: float  # |E W_n| averaged over pixels


def monte_carlo_osnr(params: GlwdParams, sample_rate_hz: float, sigma: float = 1.0,
                     chirp_duration_s: Optional[float] = None, lag_cap_s: Optional[float] = None,
                     n_trials: int = 1000, seed: int = 0, n_cols: int = 9, rows_per_width: int = 4,
                     half_span_widths: int = 6) -> OsnrEstimate:
    """Empirical output SNR of the GLWD for an LFM in white noise.

    A chirp ``exp(i n t^2)`` tuned to ``params`` is analysed at the central
    columns with a fixed lag aperture ``T_L``. The ridge coefficient is the
    peak of the noiseless distribution divided by the discrete delta height
    ``T_L |S| / (4 pi)``; the noise term is the trial average of
    ``W(f + n) - W(f)`` (signal-noise cross terms average out), its squared
    modulus debiased by the per-pixel variance over trials.
    """
    n = params.chirp_rate_n
    T = params.time_unit_s
    dt = 1.0 / sample_rate_hz
    if chirp_duration_s is None:
        # sweep 80 % of the sampled band
        chirp_duration_s = 0.8 * np.pi / dt / abs(n)
    if lag_cap_s is None:
        # short apertures keep the trial variance of the noise term low; the
        # ridge coefficient is normalized by the aperture anyway
        lag_cap_s = chirp_duration_s / 16.0
    n_samp = int(round(chirp_duration_s / dt))
    t = (np.arange(n_samp) - n_samp // 2) * dt
    f = ComplexSignal(np.exp(1j * n * t * t), sample_rate_hz, t[0])
    if not params.shared_signal_transform:
        raise ValueError("monte_carlo_osnr needs B1, B2 with equal abar and bbar")
    # a centred chirp with m = 0 maps t = 0 to x = 0 and its ridge passes u = 0 there
    x_mid = 0.0
    probe = glwd(f, params, u_grid=Grid(0.0, 1.0, 1), lag_cap_s=lag_cap_s, col_step=1)
    col_dx = probe.dt
    x_range = (x_mid - col_dx * (n_cols // 2) - 1e-15, x_mid + col_dx * (n_cols // 2) + 1e-15)
    lag_step = probe.meta["lag_step"]
    cap_m = int(math.floor(lag_cap_s / T / lag_step + 1e-9))
    TL = (2 * cap_m + 1) * lag_step
    width = 4.0 * np.pi / (abs(params.S) * TL)
    du = width / rows_per_width
    nrow = 2 * half_span_widths * rows_per_width + 1
    u_grid = Grid(-half_span_widths * width, du, nrow)
    kw = dict(u_grid=u_grid, lag_cap_s=lag_cap_s, col_step=1, x_range_s=x_range)
    Wf = glwd(f, params, **kw).values
    coef = np.abs(Wf).max() / (TL * abs(params.S) / (4.0 * np.pi))
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(Wf)
    acc2 = np.zeros(Wf.shape)
    for _ in range(n_trials):
        w = rng.standard_normal((2, n_samp))
        noise = sigma / np.sqrt(2.0) * (w[0] + 1j * w[1])
        d = glwd(f.like(f.samples + noise), params, **kw).values - Wf
        acc += d
        acc2 += np.abs(d) ** 2
    mean = acc / n_trials
    var = acc2 / n_trials - np.abs(mean) ** 2
    pow_est = np.abs(mean) ** 2 - var / (n_trials - 1)
    noise_mean = float(np.sqrt(max(pow_est.mean(), 0.0)))
    D = sigma**2 * dt / T
    return OsnrEstimate(osnr_glwd(params, D), coef / noise_mean, float(coef), noise_mean)
