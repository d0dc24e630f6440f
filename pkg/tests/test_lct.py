import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antiisrj.lct import Grid, LctParams, kernel_prefactor, lct_forward, lct_inverse, lct_quadrature
from antiisrj.siggen import ComplexSignal

from conftest import gaussian_chirp


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def unit_matrices():
    # total angle stays below pi, so the principal square root branch never wraps
    ang = st.floats(min_value=0.2, max_value=1.45)
    return st.builds(LctParams.rotation, ang)


def test_fourier_params_match_dft_oracle():
    sig = gaussian_chirp()
    n, dt, t0 = sig.n, sig.dt, sig.start_time_s
    u = 2 * np.pi * (np.arange(n) - n // 2) / (n * dt)
    out = lct_forward(sig, LctParams.fourier(), Grid(u[0], u[1] - u[0], n)).samples
    ref = kernel_prefactor(1.0) * dt * np.exp(-1j * u * t0) * np.fft.fftshift(np.fft.fft(sig.samples))
    assert rel(out, ref) <= 1e-8


def test_matches_quadrature_reference():
    sig = gaussian_chirp(n=128, dt=1 / 8)
    A = LctParams(0.6, 0.8, -0.5, 1.0)
    g = Grid(-4.0, 0.1, 81)
    out = lct_forward(sig, A, g).samples
    # quadrature on a 4x band-limited refinement of the same signal
    fine_t = np.arange(-512, 512) / 32.0
    fine = ComplexSignal(np.exp(-fine_t**2 / 2) * np.exp(1j * (0.7 * fine_t + 0.3 * fine_t**2)), 32.0, fine_t[0])
    assert rel(out, lct_quadrature(fine, A, g.points)) <= 1e-6


def test_identity_is_exact():
    sig = gaussian_chirp(n=64)
    assert np.allclose(lct_forward(sig, LctParams.identity(), Grid.of(sig)).samples, sig.samples)


@settings(max_examples=10, deadline=None)
@given(unit_matrices(), unit_matrices())
def test_additivity(A, B):
    sig = gaussian_chirp()
    g = Grid(-6.0, 0.05, 241)
    lhs = lct_forward(lct_forward(sig, A), B, g).samples
    rhs = lct_forward(sig, B @ A, g).samples
    assert rel(lhs, rhs) <= 1e-6


def test_additivity_sign_across_branch_cut():
    # composing past a half turn flips the kernel's square root branch: the two
    # routes agree up to a global sign
    sig = gaussian_chirp()
    g = Grid(-6.0, 0.05, 241)
    A, B = LctParams.rotation(1.0), LctParams.rotation(2.5)
    lhs = lct_forward(lct_forward(sig, A), B, g).samples
    rhs = lct_forward(sig, B @ A, g).samples
    assert rel(lhs, -rhs) <= 1e-6


def test_additivity_general_matrices():
    sig = gaussian_chirp()
    g = Grid(-6.0, 0.05, 241)
    A, B = LctParams(0.6, 0.8, -0.5, 1.0), LctParams(1.2, 0.5, -0.4, 2.0 / 3.0)
    lhs = lct_forward(lct_forward(sig, A), B, g).samples
    rhs = lct_forward(sig, B @ A, g).samples
    assert rel(lhs, rhs) <= 1e-6


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=-1.5, max_value=1.5), st.floats(min_value=0.3, max_value=2.0),
       st.floats(min_value=-1.0, max_value=1.0))
def test_round_trip(a, b, c):
    d = (1 + b * c) / a if abs(a) > 0.2 else None
    A = LctParams(a, b, c, d) if d is not None else LctParams.rotation(b)
    sig = gaussian_chirp()
    back = lct_inverse(lct_forward(sig, A), A, Grid.of(sig)).samples
    assert rel(back, sig.samples) <= 1e-6


def test_scaling_branch_b_zero():
    sig = gaussian_chirp(n=128)
    A = LctParams(0.5, 0.0, 0.3, 2.0)
    out = lct_forward(sig, A)
    u = out.times
    expect = math.sqrt(2.0) * np.exp(0.5j * 0.3 * 2.0 * u * u) * np.exp(-(2 * u) ** 2 / 2) \
        * np.exp(1j * (0.7 * 2 * u + 0.3 * (2 * u) ** 2))
    inside = np.abs(2 * u) < 3.5
    assert rel(out.samples[inside], expect[inside]) <= 1e-6


def test_params_validation():
    with pytest.raises(ValueError):
        LctParams(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        LctParams(float("nan"), 0.0, 0.0, 1.0)
    A = LctParams(2.0, 1.0, 1.0, 1.0)
    assert np.allclose((A @ A.inverse()).matrix, np.eye(2))
