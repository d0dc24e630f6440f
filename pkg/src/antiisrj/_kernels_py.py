"""Pure-numpy implementations of the hot loops.

These mirror ``_kernels.pyx`` exactly (same arguments, same results up to
floating-point summation order) and are used when the compiled extension is
unavailable or ``ANTIISRJ_BACKEND=python`` is set.
"""

import numpy as np


def lag_products(g1, g2, cols, mmax, lag_chirp):
    """Per-column lag products for m = 0..mmax.

    Returns ``(pp, pm)`` with ``pp[j, m] = g1[c+m] conj(g2[c-m]) chirp[m]`` and
    ``pm[j, m] = g1[c-m] conj(g2[c+m]) chirp[m]``; out-of-range samples are 0.
    """
    n = g1.size
    m = np.arange(mmax + 1)
    hi = cols[:, None] + m[None, :]
    lo = cols[:, None] - m[None, :]
    ok = (hi < n) & (lo >= 0)
    hi_c = np.clip(hi, 0, n - 1)
    lo_c = np.clip(lo, 0, n - 1)
    pp = np.where(ok, g1[hi_c] * np.conj(g2[lo_c]), 0) * lag_chirp[None, : mmax + 1]
    pm = np.where(ok, g1[lo_c] * np.conj(g2[hi_c]), 0) * lag_chirp[None, : mmax + 1]
    return pp, pm


def glwd_lag_sum(g1, g2, cols, caps, phi_row, phi_col, lag_chirp, dtau):
    """Lag sums of the generalized Wigner integrand.

    out[i, j] = sum_{|m| <= M_ij} g1[c_j+m] conj(g2[c_j-m]) chirp[|m|]
                exp(1j (phi_row[i] + phi_col[j]) m dtau)

    with ``M_ij = min(caps[i, j], c_j, n - 1 - c_j)``.
    """
    g1 = np.ascontiguousarray(g1, dtype=np.complex128)
    g2 = np.ascontiguousarray(g2, dtype=np.complex128)
    cols = np.asarray(cols, dtype=np.int64)
    caps = np.asarray(caps, dtype=np.int64)
    n = g1.size
    edge = np.minimum(cols, n - 1 - cols)
    caps = np.minimum(caps, edge[None, :])
    caps = np.maximum(caps, 0)
    nrow, ncol = caps.shape
    mmax = int(caps.max()) if caps.size else 0
    pp, pm = lag_products(g1, g2, cols, mmax, np.asarray(lag_chirp, dtype=np.complex128))
    m = np.arange(mmax + 1)
    rot_col = np.exp(1j * np.outer(np.asarray(phi_col) * dtau, m))
    pp = pp * rot_col
    pm = pm * np.conj(rot_col)
    # the m = 0 term appears once, not twice
    pm[:, 0] = 0
    out = np.empty((nrow, ncol), dtype=np.complex128)
    row_caps_only = bool(np.all(caps == caps[:, :1]))
    if row_caps_only:
        E = np.exp(1j * np.outer(np.asarray(phi_row) * dtau, m))
        E = np.where(m[None, :] <= caps[:, :1], E, 0)
        out[:] = E @ pp.T + np.conj(E) @ pm.T
    else:
        for i in range(nrow):
            e = np.exp(1j * phi_row[i] * dtau * m)
            keep = m[None, :] <= caps[i][:, None]
            out[i] = (np.where(keep, pp, 0) @ e) + (np.where(keep, pm, 0) @ np.conj(e))
    return out


def hough_vote(weights, cos_t, sin_t, rho0, drho, n_rho):
    """Weighted line-accumulator votes with linear split between rho bins.

    A pixel at (row r, col c) votes into ``rho = c cos(theta) + r sin(theta)``.
    """
    weights = np.asarray(weights, dtype=float)
    rr, cc = np.nonzero(weights)
    w = weights[rr, cc]
    acc = np.zeros((len(cos_t), n_rho))
    for k, (ct, st) in enumerate(zip(cos_t, sin_t)):
        pos = (cc * ct + rr * st - rho0) / drho
        i0 = np.floor(pos).astype(np.int64)
        frac = pos - i0
        for off, wt in ((0, 1.0 - frac), (1, frac)):
            idx = i0 + off
            ok = (idx >= 0) & (idx < n_rho)
            acc[k] += np.bincount(idx[ok], weights=(w * wt)[ok], minlength=n_rho)
    return acc
