# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ARMA recursions; see ``_pykernels`` for the reference versions."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def recursive_filter(u, coeffs, Py_ssize_t start):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], m = c.shape[0], t, s, j
    cdef double acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] y = out
    for t in range(start, n):
        acc = uv[t]
        for s in range(1, m + 1):
            j = t - s
            if j < start:
                break
            acc += c[s - 1] * y[j]
        y[t] = acc
    return out


def arma_residuals(x, ar, ma):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] psi = np.ascontiguousarray(ar, dtype=np.float64)
    cdef const double[::1] phi = np.ascontiguousarray(ma, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = psi.shape[0], q = phi.shape[0]
    cdef Py_ssize_t t, s, j
    cdef double acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] e = out
    for t in range(p, n):
        acc = xv[t]
        for s in range(1, p + 1):
            acc -= psi[s - 1] * xv[t - s]
        for s in range(1, q + 1):
            j = t - s
            if j < 0:
                break
            acc += phi[s - 1] * e[j]
        e[t] = acc
    return out


def arma_filter(eps, ar, ma):
    cdef const double[::1] ev = np.ascontiguousarray(eps, dtype=np.float64)
    cdef const double[::1] psi = np.ascontiguousarray(ar, dtype=np.float64)
    cdef const double[::1] phi = np.ascontiguousarray(ma, dtype=np.float64)
    cdef Py_ssize_t n = ev.shape[0], p = psi.shape[0], q = phi.shape[0]
    cdef Py_ssize_t t, s, j
    cdef double acc
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] y = out
    for t in range(n):
        acc = ev[t]
        for s in range(1, p + 1):
            j = t - s
            if j < 0:
                break
            acc += psi[s - 1] * y[j]
        for s in range(1, q + 1):
            j = t - s
            if j < 0:
                break
            acc -= phi[s - 1] * ev[j]
        y[t] = acc
    return out


def rolling_forecast(x, e, ar, ma, Py_ssize_t first_origin,
                     Py_ssize_t last_origin, Py_ssize_t horizon):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef const double[::1] psi = np.ascontiguousarray(ar, dtype=np.float64)
    cdef const double[::1] phi = np.ascontiguousarray(ma, dtype=np.float64)
    cdef Py_ssize_t p = psi.shape[0], q = phi.shape[0]
    cdef Py_ssize_t n_orig = last_origin - first_origin + 1
    cdef Py_ssize_t i, o, k, s, j
    cdef double acc, v
    if n_orig < 0:
        n_orig = 0
    out = np.zeros((n_orig, horizon), dtype=np.float64)
    cdef double[:, ::1] path = out
    for i in range(n_orig):
        o = first_origin + i
        for k in range(1, horizon + 1):
            acc = 0.0
            for s in range(1, p + 1):
                if s < k:
                    v = path[i, k - s - 1]
                else:
                    j = o + k - s
                    v = xv[j] if j >= 0 else 0.0
                acc += psi[s - 1] * v
            for s in range(k, q + 1):
                j = o + k - s
                if j >= 0:
                    acc -= phi[s - 1] * ev[j]
            path[i, k - 1] = acc
    return out
