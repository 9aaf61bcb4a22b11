"""Numba-jitted kernel implementations (default backend).

Loop forms of the kernels in ``_kernels_numpy``; same signatures, same
integer outputs bit-for-bit. Compiled lazily, cached on disk.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True, inline="always")
def _expit_scalar(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def gpc_pair_scan(ye, yc, taus):
    n_e, n_levels = ye.shape
    n_c = yc.shape[0]
    fav = np.zeros(n_levels, dtype=np.int64)
    unfav = np.zeros(n_levels, dtype=np.int64)
    row_cum = np.zeros((n_e, n_levels), dtype=np.int64)
    col_cum = np.zeros((n_c, n_levels), dtype=np.int64)
    for i in range(n_e):
        for j in range(n_c):
            for k in range(n_levels):
                d = ye[i, k] - yc[j, k]
                if d > taus[k]:
                    fav[k] += 1
                    for m in range(k, n_levels):
                        row_cum[i, m] += 1
                        col_cum[j, m] += 1
                    break
                elif d < -taus[k]:
                    unfav[k] += 1
                    for m in range(k, n_levels):
                        row_cum[i, m] -= 1
                        col_cum[j, m] -= 1
                    break
    return fav, unfav, row_cum, col_cum


@njit(cache=True)
def daily_state_scan(se, sc):
    n_e, n_days = se.shape
    n_c = sc.shape[0]
    wins = np.zeros(n_days, dtype=np.int64)
    losses = np.zeros(n_days, dtype=np.int64)
    for j in range(n_days):
        w = 0
        l = 0
        for i in range(n_e):
            sij = se[i, j]
            for jj in range(n_c):
                d = sij - sc[jj, j]
                if d > 0:
                    w += 1
                elif d < 0:
                    l += 1
        wins[j] = w
        losses[j] = l
    return wins, losses


@njit(cache=True)
def cumlogit_ll_grad_info(alpha, beta, X, y, n_states):
    n = y.shape[0]
    n_alpha = alpha.shape[0]
    n_beta = X.shape[1]
    pt = n_alpha + n_beta
    grad = np.zeros(pt)
    info = np.zeros((pt, pt))
    va = np.zeros(pt)
    vb = np.zeros(pt)
    w = np.zeros(pt)
    ll = 0.0
    for r in range(n):
        xb = 0.0
        for m in range(n_beta):
            xb += X[r, m] * beta[m]
        yr = y[r]

        fa = 1.0
        ga = 0.0
        gpa = 0.0
        ia = -1
        if yr >= 2:
            ia = yr - 2
            fa = _expit_scalar(alpha[ia] + xb)
            ga = fa * (1.0 - fa)
            gpa = ga * (1.0 - 2.0 * fa)
        fb = 0.0
        gb = 0.0
        gpb = 0.0
        ib = -1
        if yr <= n_states - 1:
            ib = yr - 1
            fb = _expit_scalar(alpha[ib] + xb)
            gb = fb * (1.0 - fb)
            gpb = gb * (1.0 - 2.0 * fb)

        p = fa - fb
        if not (p > 0.0) or not np.isfinite(p):
            return False, -np.inf, grad, info
        ll += np.log(p)

        for t in range(pt):
            va[t] = 0.0
            vb[t] = 0.0
        if ia >= 0:
            va[ia] = 1.0
        if ib >= 0:
            vb[ib] = 1.0
        for m in range(n_beta):
            va[n_alpha + m] = X[r, m]
            vb[n_alpha + m] = X[r, m]

        ca = ga / p
        cb = gb / p
        qa = gpa / p
        qb = gpb / p
        for t in range(pt):
            w[t] = ca * va[t] - cb * vb[t]
            grad[t] += w[t]
        for t in range(pt):
            wt = w[t]
            vat = va[t]
            vbt = vb[t]
            for s in range(pt):
                info[t, s] += wt * w[s] - qa * vat * va[s] + qb * vbt * vb[s]
    return True, ll, grad, info


@njit(cache=True)
def simulate_paths(cdf, u, baseline_state):
    n, n_days = u.shape
    n_states = cdf.shape[1]
    states = np.empty((n, n_days + 1), dtype=np.int64)
    for i in range(n):
        states[i, 0] = baseline_state
        cur = baseline_state - 1
        for j in range(n_days):
            uij = u[i, j]
            nxt = 0
            for m in range(n_states - 1):
                if uij >= cdf[j, cur, m]:
                    nxt += 1
            cur = nxt
            states[i, j + 1] = nxt + 1
    return states
