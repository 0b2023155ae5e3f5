# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled time-stepping core for the spinor wave packet.

One step applies the truncated Taylor series of exp(-i dt K) with
K = [[V, D], [-D, V]] (D the periodic 4th-order first-derivative stencil),
then the exact mass phase exp(-i sigma_z m dt). With ``strang`` the mass
phase is split in two halves around the series.

Complex arrays are handled as interleaved (re, im) doubles.
"""

import numpy as np
from libc.math cimport cos, sin, fabs


cdef inline void _row(const double* tu, const double* tw, const double* v, double* nu, double* nw,
                      Py_ssize_t j, Py_ssize_t a2, Py_ssize_t a1, Py_ssize_t b1, Py_ssize_t b2,
                      double inv12h, double c) noexcept nogil:
    # n{u,w} = -i c (V t{u,w} +/- D t{w,u})
    cdef double xr, xi, yr, yi
    xr = v[j] * tu[2 * j] + (tw[2 * a2] - tw[2 * b2] + 8.0 * (tw[2 * b1] - tw[2 * a1])) * inv12h
    xi = v[j] * tu[2 * j + 1] + (tw[2 * a2 + 1] - tw[2 * b2 + 1] + 8.0 * (tw[2 * b1 + 1] - tw[2 * a1 + 1])) * inv12h
    yr = v[j] * tw[2 * j] - (tu[2 * a2] - tu[2 * b2] + 8.0 * (tu[2 * b1] - tu[2 * a1])) * inv12h
    yi = v[j] * tw[2 * j + 1] - (tu[2 * a2 + 1] - tu[2 * b2 + 1] + 8.0 * (tu[2 * b1 + 1] - tu[2 * a1 + 1])) * inv12h
    nu[2 * j] = c * xi
    nu[2 * j + 1] = -c * xr
    nw[2 * j] = c * yi
    nw[2 * j + 1] = -c * yr


cdef void _apply_k(const double* tu, const double* tw, const double* v, double* nu, double* nw,
                   Py_ssize_t n, double inv12h, double c) noexcept nogil:
    cdef Py_ssize_t j
    # periodic wrap only touches the two cells at each end
    _row(tu, tw, v, nu, nw, 0, n - 2, n - 1, 1, 2, inv12h, c)
    _row(tu, tw, v, nu, nw, 1, n - 1, 0, 2, 3, inv12h, c)
    for j in range(2, n - 2):
        _row(tu, tw, v, nu, nw, j, j - 2, j - 1, j + 1, j + 2, inv12h, c)
    _row(tu, tw, v, nu, nw, n - 2, n - 4, n - 3, n - 1, 0, inv12h, c)
    _row(tu, tw, v, nu, nw, n - 1, n - 3, n - 2, 0, 1, inv12h, c)


cdef double _sumsq(const double* a, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0
    for j in range(m):
        s += a[j] * a[j]
    return s


cdef void _phase(double* u, double* w, Py_ssize_t n, double angle) noexcept nogil:
    # u *= exp(-i angle), w *= exp(+i angle)
    cdef Py_ssize_t j
    cdef double c = cos(angle), s = sin(angle), re, im
    for j in range(n):
        re = u[2 * j]
        im = u[2 * j + 1]
        u[2 * j] = c * re + s * im
        u[2 * j + 1] = c * im - s * re
        re = w[2 * j]
        im = w[2 * j + 1]
        w[2 * j] = c * re - s * im
        w[2 * j + 1] = c * im + s * re


def taylor_steps(double complex[::1] u, double complex[::1] w, const double[::1] v, double h, double dt,
                 double mass, long n_steps, double tol, int n_max, bint strang,
                 const double[::1] mask):
    """Advance (u, w) in place by ``n_steps`` steps.

    Returns (max per-step norm drift, max series terms used, all converged,
    norm removed by ``mask``). The drift is measured before masking; pass an
    empty mask for periodic boundaries.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j, m2 = 2 * n
    cdef long step
    cdef int k, used, max_used = 0
    cdef bint converged = True
    cdef bint use_mask = mask.shape[0] == n
    cdef double inv12h = 1.0 / (12.0 * h)
    cdef double before, after, drift, max_drift = 0.0, term2, absorbed = 0.0
    cdef double tol2 = tol * tol / h
    work = np.empty(4 * m2, dtype=np.float64)
    cdef double[::1] wv = work
    cdef double* pu = <double*> &u[0]
    cdef double* pw = <double*> &w[0]
    cdef const double* pv = &v[0]
    cdef double* tu = &wv[0]
    cdef double* tw = &wv[m2]
    cdef double* nu = &wv[2 * m2]
    cdef double* nw = &wv[3 * m2]
    cdef double* swap
    cdef const double* pm = NULL
    if use_mask:
        pm = &mask[0]
    with nogil:
        for step in range(n_steps):
            before = _sumsq(pu, m2) + _sumsq(pw, m2)
            if strang:
                _phase(pu, pw, n, 0.5 * mass * dt)
            for j in range(m2):
                tu[j] = pu[j]
                tw[j] = pw[j]
            used = -1
            for k in range(1, n_max + 1):
                _apply_k(tu, tw, pv, nu, nw, n, inv12h, dt / k)
                term2 = 0.0
                for j in range(m2):
                    pu[j] += nu[j]
                    pw[j] += nw[j]
                    term2 += nu[j] * nu[j] + nw[j] * nw[j]
                swap = tu
                tu = nu
                nu = swap
                swap = tw
                tw = nw
                nw = swap
                if term2 < tol2:
                    used = k
                    break
            if used < 0:
                converged = False
                used = n_max
            if used > max_used:
                max_used = used
            _phase(pu, pw, n, (0.5 if strang else 1.0) * mass * dt)
            after = _sumsq(pu, m2) + _sumsq(pw, m2)
            drift = fabs(after - before) * h
            if drift > max_drift:
                max_drift = drift
            if use_mask:
                for j in range(n):
                    pu[2 * j] *= pm[j]
                    pu[2 * j + 1] *= pm[j]
                    pw[2 * j] *= pm[j]
                    pw[2 * j + 1] *= pm[j]
                absorbed += (after - _sumsq(pu, m2) - _sumsq(pw, m2)) * h
    return max_drift, max_used, converged, absorbed
