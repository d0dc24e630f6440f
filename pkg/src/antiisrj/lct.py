"""Discrete linear canonical transform.

For a unit-determinant matrix A = (a, b; c, d) with b != 0 the transform is

    F_A(u) = integral f(t) K_A(u, t) dt,
    K_A(u, t) = exp(j[(d/2b) u^2 - (1/b) u t + (a/2b) t^2]) / sqrt(j 2 pi b),

and for b == 0 it reduces to the scaling ``sqrt(d) exp(j c d u^2 / 2) f(d u)``.

The b != 0 case is evaluated as chirp multiply, scaled DFT (a chirp-z
transform, so any equispaced output grid is reachable) and a second chirp
multiply. The square roots use numpy's principal branch.

Sampling
--------
The Riemann sum is exact for band-limited integrands, so the input is first
band-limited-interpolated (after 2x zero padding) until the pre-chirped
integrand is Nyquist sampled. The default output grid uses the natural DFT
spacing ``2 pi |b| / (N_pad dt)`` with ``N_pad = 2N``, refined when the
mapped time-frequency box needs denser sampling, and spans the image of the
input box ``[t_first, t_last] x [-pi/dt, pi/dt]`` under A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import czt

from .siggen import ComplexSignal

DET_TOL = 1e-12


@dataclass(frozen=True)
class LctParams:
    """Unit-determinant real parameter matrix (a, b; c, d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"parameter {name} is not finite")
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > DET_TOL * max(1.0, abs(self.a * self.d), abs(self.b * self.c)):
            raise ValueError(f"det(A) = {det!r} differs from 1")

    @classmethod
    def from_matrix(cls, m) -> "LctParams":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def fourier(cls) -> "LctParams":
        return cls(0.0, 1.0, -1.0, 0.0)

    @classmethod
    def identity(cls) -> "LctParams":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, theta: float) -> "LctParams":
        """Fractional Fourier transform of angle ``theta``."""
        return cls(math.cos(theta), math.sin(theta), -math.sin(theta), math.cos(theta))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def inverse(self) -> "LctParams":
        return LctParams(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "LctParams") -> "LctParams":
        """Matrix product; ``A2 @ A1`` is the transform that applies A1 first."""
        m = self.matrix @ other.matrix
        return LctParams(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def norm_inf(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))


@dataclass(frozen=True)
class Grid:
    """Equispaced axis ``start + step * arange(n)``."""

    start: float
    step: float
    n: int

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)

    @classmethod
    def of(cls, signal: ComplexSignal) -> "Grid":
        return cls(signal.start_time_s, signal.dt, signal.n)

    @classmethod
    def centered(cls, center: float, step: float, n: int) -> "Grid":
        return cls(center - step * (n - 1) / 2.0, step, n)


def kernel_prefactor(b: float) -> complex:
    """1 / sqrt(j 2 pi b), principal branch."""
    return 1.0 / np.sqrt(2j * np.pi * b)


def kernel(params: LctParams, u, t):
    """LCT kernel K_A(u, t) for b != 0 (broadcasts over ``u`` and ``t``).

    Raises
    ------
    ValueError
        If ``b == 0``; that case has no integral kernel.
    """
    a, b, d = params.a, params.b, params.d
    if b == 0:
        raise ValueError("kernel undefined for b == 0; use the scaling branch")
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)
    phase = (d / (2 * b)) * u * u - u * t / b + (a / (2 * b)) * t * t
    return kernel_prefactor(b) * np.exp(1j * phase)


def _pad_and_upsample(x: np.ndarray, t0: float, dt: float, factor: int):
    """2x zero pad then band-limited interpolation by an integer factor."""
    if factor <= 1:
        return x, t0, dt
    n = x.size
    npad = 2 * n
    spec = np.fft.fft(x, npad)
    nup = npad * factor
    out = np.zeros(nup, dtype=np.complex128)
    h = npad // 2
    out[:h] = spec[:h]
    out[nup - (npad - h):] = spec[h:]
    if npad % 2 == 0:
        # split the Nyquist bin so that real signals stay real
        out[h] *= 0.5
        out[nup - h] = out[h]
    y = np.fft.ifft(out) * factor
    return y, t0, dt / factor


def sinc_interpolate(x: np.ndarray, t0: float, dt: float, s) -> np.ndarray:
    """Whittaker-Shannon interpolation of samples ``x`` at times ``s``."""
    s = np.asarray(s, dtype=float)
    k = np.arange(x.size)
    out = np.empty(s.shape, dtype=np.complex128)
    flat = s.ravel()
    res = out.ravel()
    chunk = max(1, 4_000_000 // max(1, x.size))
    for i in range(0, flat.size, chunk):
        pos = (flat[i:i + chunk, None] - t0) / dt - k[None, :]
        res[i:i + chunk] = np.sinc(pos) @ x
    return out


def integrand_oversampling(params: LctParams, grid: Grid, band: Optional[float] = None) -> int:
    """Integer upsampling factor that Nyquist-samples the pre-chirped integrand.

    ``band`` is the one-sided angular bandwidth of the input; default pi/dt.
    """
    if params.b == 0:
        return 1
    omega = math.pi / grid.step if band is None else band
    tmax = max(abs(grid.start), abs(grid.start + grid.step * (grid.n - 1)))
    need = (omega + abs(params.a / params.b) * tmax) * grid.step / math.pi
    return max(1, int(math.ceil(need - 1e-9)))


def mapped_box(params: LctParams, grid: Grid, band: Optional[float] = None):
    """Range of u and the largest |conjugate variable| after mapping the TF box.

    Returns ``(u_min, u_max, mu_max)`` for the box
    ``[t_first, t_last] x [-band, band]`` mapped by (u, mu) = A (t, omega).
    """
    omega = math.pi / grid.step if band is None else band
    t_lo, t_hi = grid.start, grid.start + grid.step * (grid.n - 1)
    corners = np.array([[t_lo, -omega], [t_lo, omega], [t_hi, -omega], [t_hi, omega]])
    u = params.a * corners[:, 0] + params.b * corners[:, 1]
    mu = params.c * corners[:, 0] + params.d * corners[:, 1]
    return float(u.min()), float(u.max()), float(np.abs(mu).max())


def default_output_grid(signal: ComplexSignal, params: LctParams, band: Optional[float] = None) -> Grid:
    """Output grid used when the caller does not request one (see module notes)."""
    g = Grid.of(signal)
    if params.b == 0:
        # exact resampling: u_k = t_k / d, kept ascending
        pts = g.points / params.d
        step = abs(g.step / params.d)
        return Grid(float(pts.min()), step, g.n)
    u_lo, u_hi, mu_max = mapped_box(params, g, band)
    step = 2 * math.pi * abs(params.b) / (2 * g.n * g.step)
    if mu_max > 0:
        step = min(step, math.pi / mu_max)
    n = int(math.ceil((u_hi - u_lo) / step)) + 1
    return Grid.centered(0.5 * (u_lo + u_hi), step, n)


def lct_forward(signal: ComplexSignal, params: LctParams, grid: Optional[Grid] = None,
                band: Optional[float] = None) -> ComplexSignal:
    """Forward LCT of a sampled signal.

    Parameters
    ----------
    signal : ComplexSignal
        Input samples; its time axis (``start_time_s``, ``dt``) is used as-is,
        so callers working in normalized units pass normalized axes.
    params : LctParams
        Transform matrix.
    grid : Grid, optional
        Output grid. Defaults to :func:`default_output_grid`.
    band : float, optional
        One-sided angular bandwidth of the input (defaults to pi/dt); only
        used to size sampling and the default grid.

    Returns
    -------
    ComplexSignal
        LCT-domain samples; ``sample_rate_hz`` is ``1/du`` and
        ``start_time_s`` the first output coordinate.
    """
    if grid is None:
        grid = default_output_grid(signal, params, band)
    u = grid.points
    x = signal.samples
    t0, dt = signal.start_time_s, signal.dt
    a, b, c, d = params.a, params.b, params.c, params.d
    if b == 0:
        on_grid = (grid.n == signal.n and np.allclose(
            np.sort(signal.times / d), u, rtol=0, atol=1e-9 * abs(dt / d)))
        if on_grid:
            f_du = x if d > 0 else x[::-1]
        else:
            f_du = sinc_interpolate(x, t0, dt, d * u)
        out = np.sqrt(complex(d)) * np.exp(0.5j * c * d * u * u) * f_du
        return ComplexSignal(out, 1.0 / grid.step, grid.start)

    factor = integrand_oversampling(params, Grid(t0, dt, signal.n), band)
    if factor > 1:
        x, t0, dt = _pad_and_upsample(x, t0, dt, factor)
    t = t0 + dt * np.arange(x.size)
    g = x * np.exp(1j * (a / (2 * b)) * t * t)
    w = np.exp(-1j * grid.step * dt / b)
    start = np.exp(1j * grid.start * dt / b)
    s = czt(g, m=grid.n, w=w, a=start)
    s *= np.exp(-1j * u * t0 / b)
    out = kernel_prefactor(b) * np.exp(1j * (d / (2 * b)) * u * u) * s * dt
    return ComplexSignal(out, 1.0 / grid.step, grid.start)


def lct_inverse(signal: ComplexSignal, params: LctParams, grid: Optional[Grid] = None,
                band: Optional[float] = None) -> ComplexSignal:
    """Inverse LCT, i.e. the forward transform with (d, -b; -c, a).

    Pass the original time grid as ``grid`` to land back on the input samples.
    """
    return lct_forward(signal, params.inverse(), grid, band)


def lct_quadrature(signal: ComplexSignal, params: LctParams, u) -> np.ndarray:
    """Brute-force Riemann sum of the LCT integral at points ``u`` (b != 0).

    Meant as a slow reference for tests, not for production use.
    """
    t = signal.times
    K = kernel(params, np.asarray(u)[:, None], t[None, :])
    return K @ signal.samples * signal.dt
