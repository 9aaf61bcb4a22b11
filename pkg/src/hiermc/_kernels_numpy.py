"""Pure-numpy kernel implementations (fallback backend).

Same signatures and semantics as ``_kernels_numba``. Pairwise scans build
(n_e, n_c) masks per level; the likelihood kernel works on dense per-record
gradient blocks.
"""

import numpy as np

BACKEND = "numpy"


def _expit(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def gpc_pair_scan(ye, yc, taus):
    """Score every cross-arm pair against a prioritized threshold rule.

    ``ye`` (n_e, L) and ``yc`` (n_c, L) are direction-adjusted outcome values
    (larger is better on every level); ``taus`` (L,) are the win margins.
    A pair is decided at the first level where |difference| > tau; ties pass
    down; pairs tying on every level stay neutral.

    Returns ``(fav, unfav, row_cum, col_cum)``: per-level favorable and
    unfavorable counts (int64, length L), and per-subject sums over the
    opposite arm of the pair score truncated at each level
    (shapes (n_e, L) and (n_c, L), int64).
    """
    n_e, n_levels = ye.shape
    n_c = yc.shape[0]
    fav = np.zeros(n_levels, dtype=np.int64)
    unfav = np.zeros(n_levels, dtype=np.int64)
    row_cum = np.zeros((n_e, n_levels), dtype=np.int64)
    col_cum = np.zeros((n_c, n_levels), dtype=np.int64)
    active = np.ones((n_e, n_c), dtype=bool)
    score = np.zeros((n_e, n_c), dtype=np.int64)
    for k in range(n_levels):
        diff = ye[:, k, None] - yc[None, :, k]
        win = active & (diff > taus[k])
        loss = active & (diff < -taus[k])
        fav[k] = np.count_nonzero(win)
        unfav[k] = np.count_nonzero(loss)
        score += win
        score -= loss
        row_cum[:, k] = score.sum(axis=1)
        col_cum[:, k] = score.sum(axis=0)
        active &= ~(win | loss)
    return fav, unfav, row_cum, col_cum


def daily_state_scan(se, sc):
    """Per-day pairwise win/loss counts on the daily ordinal state scale.

    ``se`` (n_e, J) and ``sc`` (n_c, J) hold states for days 1..J.
    Returns ``(wins, losses)``, both (J,) int64.
    """
    n_days = se.shape[1]
    wins = np.empty(n_days, dtype=np.int64)
    losses = np.empty(n_days, dtype=np.int64)
    for j in range(n_days):
        diff = se[:, j, None] - sc[None, :, j]
        wins[j] = np.count_nonzero(diff > 0)
        losses[j] = np.count_nonzero(diff < 0)
    return wins, losses


def cumlogit_ll_grad_info(alpha, beta, X, y, n_states):
    """Log-likelihood, gradient, and observed information of the
    cumulative-logit transition model at (alpha, beta).

    ``alpha`` (K-1,) are the cutpoint intercepts for categories 2..K,
    ``X`` (n, P) the slope design, ``y`` (n,) current states in 1..K.

    Returns ``(ok, ll, grad, info)`` with parameters ordered
    (alpha_2..alpha_K, beta). ``ok`` is False (ll = -inf) when some record
    gets a non-positive category probability, i.e. the cumulative path is
    invalid at that point.
    """
    n = y.shape[0]
    n_alpha = alpha.shape[0]
    n_beta = X.shape[1]
    pt = n_alpha + n_beta
    grad = np.zeros(pt)
    info = np.zeros((pt, pt))

    xb = X @ beta if n_beta else np.zeros(n)
    has_a = y >= 2
    has_b = y <= n_states - 1
    ia = np.where(has_a, y - 2, 0)
    ib = np.where(has_b, y - 1, 0)

    fa = np.where(has_a, _expit(alpha[ia] + xb), 1.0)
    fb = np.where(has_b, _expit(alpha[ib] + xb), 0.0)
    p = fa - fb
    if not np.all(p > 0.0) or not np.all(np.isfinite(p)):
        return False, -np.inf, grad, info
    ll = float(np.sum(np.log(p)))

    ga = np.where(has_a, fa * (1.0 - fa), 0.0)
    gb = np.where(has_b, fb * (1.0 - fb), 0.0)
    gpa = ga * (1.0 - 2.0 * fa)
    gpb = gb * (1.0 - 2.0 * fb)

    # dense per-record derivative blocks d(eta)/d(theta) for both cutpoints
    A = np.zeros((n, pt))
    B = np.zeros((n, pt))
    rows = np.arange(n)
    A[rows[has_a], ia[has_a]] = 1.0
    B[rows[has_b], ib[has_b]] = 1.0
    if n_beta:
        A[:, n_alpha:] = X
        B[:, n_alpha:] = X

    ca = ga / p
    cb = gb / p
    W = ca[:, None] * A - cb[:, None] * B
    grad = W.sum(axis=0)
    info = W.T @ W - (A * (gpa / p)[:, None]).T @ A + (B * (gpb / p)[:, None]).T @ B
    return True, ll, grad, info


def simulate_paths(cdf, u, baseline_state):
    """Roll forward ordinal state paths through per-day transition CDFs.

    ``cdf`` (J, K, K): cumulative transition rows (cdf[j, prev-1, m] =
    P(next <= m+1) entering day j+1); ``u`` (n, J) uniforms in [0, 1);
    ``baseline_state`` 1-based day-0 state. Returns (n, J+1) int64 states.
    """
    n, n_days = u.shape
    states = np.empty((n, n_days + 1), dtype=np.int64)
    states[:, 0] = baseline_state
    cur = np.full(n, baseline_state - 1, dtype=np.int64)
    for j in range(n_days):
        rows = cdf[j, cur, :]
        cur = (u[:, j, None] >= rows[:, :-1]).sum(axis=1)
        states[:, j + 1] = cur + 1
    return states
