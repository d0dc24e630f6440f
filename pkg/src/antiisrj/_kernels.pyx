# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``.

Same signatures and semantics; see the pure-Python module for documentation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, floor

cnp.import_array()


def glwd_lag_sum(g1, g2, cols, caps, phi_row, phi_col, lag_chirp, double dtau):
    cdef double complex[::1] a1 = np.ascontiguousarray(g1, dtype=np.complex128)
    cdef double complex[::1] a2 = np.ascontiguousarray(g2, dtype=np.complex128)
    cdef long long[::1] cv = np.ascontiguousarray(cols, dtype=np.int64)
    cdef long long[:, ::1] capv = np.ascontiguousarray(caps, dtype=np.int64)
    cdef double[::1] pr = np.ascontiguousarray(phi_row, dtype=np.float64)
    cdef double[::1] pc = np.ascontiguousarray(phi_col, dtype=np.float64)
    cdef double complex[::1] ch = np.ascontiguousarray(lag_chirp, dtype=np.complex128)
    cdef Py_ssize_t n = a1.shape[0]
    cdef Py_ssize_t nrow = capv.shape[0]
    cdef Py_ssize_t ncol = capv.shape[1]
    out_arr = np.zeros((nrow, ncol), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t mmax = 0
    cdef Py_ssize_t i, j, m, c, edge, M
    for i in range(nrow):
        for j in range(ncol):
            if capv[i, j] > mmax:
                mmax = capv[i, j]
    pp_arr = np.zeros(mmax + 1, dtype=np.complex128)
    pm_arr = np.zeros(mmax + 1, dtype=np.complex128)
    cdef double complex[::1] pp = pp_arr
    cdef double complex[::1] pm = pm_arr
    cdef double complex acc, rot, step, colrot, colstep
    cdef double th
    with nogil:
        for j in range(ncol):
            c = cv[j]
            edge = c
            if n - 1 - c < edge:
                edge = n - 1 - c
            if edge > mmax:
                edge = mmax
            # column products with the column phase folded in
            th = pc[j] * dtau
            colstep = cos(th) + 1j * sin(th)
            colrot = 1.0
            pp[0] = a1[c] * a2[c].conjugate() * ch[0]
            for m in range(1, edge + 1):
                colrot = colrot * colstep
                pp[m] = a1[c + m] * a2[c - m].conjugate() * ch[m] * colrot
                pm[m] = a1[c - m] * a2[c + m].conjugate() * ch[m] * colrot.conjugate()
            for i in range(nrow):
                M = capv[i, j]
                if M > edge:
                    M = edge
                th = pr[i] * dtau
                step = cos(th) + 1j * sin(th)
                rot = 1.0
                acc = pp[0]
                for m in range(1, M + 1):
                    rot = rot * step
                    acc = acc + pp[m] * rot + pm[m] * rot.conjugate()
                out[i, j] = acc
    return out_arr


def hough_vote(weights, cos_t, sin_t, double rho0, double drho, Py_ssize_t n_rho):
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] ct = np.ascontiguousarray(cos_t, dtype=np.float64)
    cdef double[::1] st = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef Py_ssize_t nth = ct.shape[0]
    acc_arr = np.zeros((nth, n_rho), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    cdef Py_ssize_t r, c, k, i0
    cdef double val, pos, frac
    with nogil:
        for r in range(w.shape[0]):
            for c in range(w.shape[1]):
                val = w[r, c]
                if val == 0.0:
                    continue
                for k in range(nth):
                    pos = (c * ct[k] + r * st[k] - rho0) / drho
                    i0 = <Py_ssize_t> floor(pos)
                    frac = pos - i0
                    if 0 <= i0 < n_rho:
                        acc[k, i0] += val * (1.0 - frac)
                    if 0 <= i0 + 1 < n_rho:
                        acc[k, i0 + 1] += val * frac
    return acc_arr
