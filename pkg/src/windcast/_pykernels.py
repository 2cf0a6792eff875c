"""Pure-Python implementations of the ARMA recursions.

These are the reference versions of the routines in ``_ckernels.pyx`` and
are used whenever the compiled extension is unavailable.  Every routine
treats values before the start of the record as zero.
"""
import numpy as np


def recursive_filter(u, coeffs, start):
    """y[t] = u[t] + sum_s coeffs[s-1] * y[t-s] for t >= start, zero before."""
    u = np.asarray(u, dtype=np.float64)
    c = [float(v) for v in coeffs]
    n = u.shape[0]
    y = [0.0] * n
    uu = u.tolist()
    for t in range(start, n):
        acc = uu[t]
        for s, cs in enumerate(c, 1):
            j = t - s
            if j < start:
                break
            acc += cs * y[j]
        y[t] = acc
    return np.array(y, dtype=np.float64)


def arma_residuals(x, ar, ma):
    """Conditional residuals of a mean-adjusted series.

    e[t] = x[t] - sum psi_s x[t-s] + sum phi_s e[t-s] for t >= p, and
    e[t] = 0 for t < p.
    """
    xs = np.asarray(x, dtype=np.float64).tolist()
    psi = [float(v) for v in ar]
    phi = [float(v) for v in ma]
    p = len(psi)
    n = len(xs)
    e = [0.0] * n
    for t in range(p, n):
        acc = xs[t]
        for s in range(1, p + 1):
            acc -= psi[s - 1] * xs[t - s]
        for s, ph in enumerate(phi, 1):
            j = t - s
            if j < 0:
                break
            acc += ph * e[j]
        e[t] = acc
    return np.array(e, dtype=np.float64)


def arma_filter(eps, ar, ma):
    """y[t] = sum psi_s y[t-s] + eps[t] - sum phi_s eps[t-s], zero pre-sample."""
    es = np.asarray(eps, dtype=np.float64).tolist()
    psi = [float(v) for v in ar]
    phi = [float(v) for v in ma]
    n = len(es)
    y = [0.0] * n
    for t in range(n):
        acc = es[t]
        for s, ps in enumerate(psi, 1):
            j = t - s
            if j < 0:
                break
            acc += ps * y[j]
        for s, ph in enumerate(phi, 1):
            j = t - s
            if j < 0:
                break
            acc -= ph * es[j]
        y[t] = acc
    return np.array(y, dtype=np.float64)


def rolling_forecast(x, e, ar, ma, first_origin, last_origin, horizon):
    """Multi-step forecast paths from every origin in [first_origin, last_origin].

    Row ``i`` holds the forecasts of x[o+1], ..., x[o+horizon] made at origin
    ``o = first_origin + i`` using observations and residuals up to ``o``;
    future residuals are replaced by zero.
    """
    xs = np.asarray(x, dtype=np.float64).tolist()
    es = np.asarray(e, dtype=np.float64).tolist()
    psi = [float(v) for v in ar]
    phi = [float(v) for v in ma]
    p = len(psi)
    q = len(phi)
    n_orig = last_origin - first_origin + 1
    out = np.zeros((max(n_orig, 0), horizon), dtype=np.float64)
    path = [0.0] * horizon
    for i in range(max(n_orig, 0)):
        o = first_origin + i
        for k in range(1, horizon + 1):
            acc = 0.0
            for s in range(1, p + 1):
                if s < k:
                    v = path[k - s - 1]
                else:
                    j = o + k - s
                    v = xs[j] if j >= 0 else 0.0
                acc += psi[s - 1] * v
            for s in range(k, q + 1):
                j = o + k - s
                if j >= 0:
                    acc -= phi[s - 1] * es[j]
            path[k - 1] = acc
        out[i, :] = path
    return out
