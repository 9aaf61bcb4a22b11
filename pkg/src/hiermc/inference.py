"""Shared inference machinery: two-sample U-statistic (projection) variance
with normal-approximation CIs and p-values, and the deterministic percentile
bootstrap engine used by every method.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .backend import worker_count
from .errors import AllReplicatesFailedError, NumericalError
from .trial_data import ARMS, TrialDataset

_NORMAL = NormalDist()

BOOTSTRAP_LOWER_Q = 0.025
BOOTSTRAP_UPPER_Q = 0.975
_SUBSEED_DOMAIN_SIM = 1
_SUBSEED_DOMAIN_BOOT = 2


@dataclass(frozen=True)
class UStatSummary:
    delta: float
    se: float
    z: float
    ci: tuple
    p: float
    sided: str
    alpha_level: float
    n_e: int
    n_c: int
    degenerate: bool


def ustat_inference(score_matrix=None, row_means=None, col_means=None,
                    alpha_level=0.05, sided="two"):
    """Normal-approximation inference for a two-sample pairwise statistic.

    Accepts either the full (n_e, n_c) score matrix or the per-subject mean
    scores of both margins. The variance is the leading-order two-sample
    projection estimate S_E^2/n_E + S_C^2/n_C with S^2 the sample variance of
    the per-subject means. ``sided="one"`` tests H1: delta > 0.
    """
    if score_matrix is not None:
        score_matrix = np.asarray(score_matrix, dtype=np.float64)
        row_means = score_matrix.mean(axis=1)
        col_means = score_matrix.mean(axis=0)
    row_means = np.asarray(row_means, dtype=np.float64)
    col_means = np.asarray(col_means, dtype=np.float64)
    n_e, n_c = row_means.size, col_means.size
    if n_e < 2 or n_c < 2:
        raise NumericalError("need at least 2 subjects per arm for inference",
                             code="TOO_FEW_SUBJECTS")
    if sided not in ("two", "one"):
        raise ValueError(f"sided must be 'two' or 'one', got {sided!r}")

    delta = float(row_means.mean())
    check = float(col_means.mean())
    if abs(delta - check) > 1e-10 * max(1.0, abs(delta)):
        raise NumericalError(
            f"score-matrix margins disagree: {delta} vs {check}", code="MARGIN_MISMATCH"
        )
    var = float(np.var(row_means, ddof=1)) / n_e + float(np.var(col_means, ddof=1)) / n_c
    se = math.sqrt(max(var, 0.0))

    if se == 0.0:
        favors = delta > 0.0 if sided == "one" else delta != 0.0
        p = 0.0 if favors else 1.0
        return UStatSummary(delta, 0.0, math.copysign(math.inf, delta) if delta else 0.0,
                            (delta, delta), p, sided, alpha_level, n_e, n_c, True)

    z = delta / se
    if sided == "two":
        p = 2.0 * (1.0 - _NORMAL.cdf(abs(z)))
    else:
        p = 1.0 - _NORMAL.cdf(z)
    zq = _NORMAL.inv_cdf(1.0 - alpha_level / 2.0)
    ci = (delta - zq * se, delta + zq * se)
    return UStatSummary(delta, se, z, ci, p, sided, alpha_level, n_e, n_c, False)


def subseed_rng(seed, index, domain=_SUBSEED_DOMAIN_BOOT):
    """Counter-based per-task stream: Philox keyed by (seed, domain<<32|index).

    Derivation from (master seed, task index) keeps results independent of
    execution schedule; domains separate simulation and bootstrap streams.
    """
    key = np.array([np.uint64(seed), np.uint64((domain << 32) | index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def rng_descriptor(seed):
    return {
        "algorithm": "philox4x64",
        "provider": "numpy.random.Philox",
        "numpy_version": np.__version__,
        "seed": int(seed),
        "subseed_rule": "key=(seed, domain<<32|index); domain 1=simulation, 2=bootstrap",
    }


def resample_within_arms(data, rng):
    """One bootstrap resample: draw patients with replacement within each arm,
    preserving arm sizes. Resampled ids are renamed to stay unique."""
    ids = []
    arms = []
    rows = []
    for arm in ARMS:
        idx = data.arm_indices(arm)
        draw = idx[rng.integers(0, idx.size, idx.size)]
        for k, i in enumerate(draw):
            ids.append(f"{arm}b{k:05d}")
            arms.append(arm)
            rows.append(data.states[i])
    return TrialDataset(ids, arms, np.vstack(rows), data.state_space)


def percentile_bounds_indices(n):
    """Order-statistic indices of the 2.5/97.5 percentile bounds."""
    lo = max(0, math.ceil(BOOTSTRAP_LOWER_Q * n) - 1)
    hi = min(n - 1, math.ceil(BOOTSTRAP_UPPER_Q * n) - 1)
    return lo, hi


@dataclass(frozen=True)
class BootstrapResult:
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_replicates: int
    n_failed: int
    failed_indices: tuple
    replicate_values: np.ndarray
    seed: int


def percentile_bootstrap(data, statistic, n_replicates, seed):
    """Within-arm percentile bootstrap of ``statistic(dataset) -> scalar|1-D``.

    Deterministic for fixed (seed, n_replicates) regardless of worker count:
    replicate r draws from the Philox stream keyed by (seed, r). Replicates
    whose statistic raises NumericalError are dropped and counted; a >2% drop
    rate emits a warning.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    point = np.atleast_1d(np.asarray(statistic(data), dtype=np.float64))

    def one(r):
        rng = subseed_rng(seed, r)
        resampled = resample_within_arms(data, rng)
        try:
            return np.atleast_1d(np.asarray(statistic(resampled), dtype=np.float64))
        except NumericalError:
            return None

    workers = worker_count()
    results = [None] * n_replicates
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for r, value in zip(range(n_replicates), pool.map(one, range(n_replicates))):
                results[r] = value
    else:
        for r in range(n_replicates):
            results[r] = one(r)

    failed = tuple(r for r, v in enumerate(results) if v is None)
    kept = [v for v in results if v is not None]
    if not kept:
        raise AllReplicatesFailedError(
            f"all {n_replicates} bootstrap replicates failed"
        )
    if len(failed) > 0.02 * n_replicates:
        warnings.warn(
            f"{len(failed)}/{n_replicates} bootstrap replicates dropped "
            "(non-convergence)", RuntimeWarning)

    values = np.vstack(kept)
    values_sorted = np.sort(values, axis=0)
    lo, hi = percentile_bounds_indices(values_sorted.shape[0])
    return BootstrapResult(
        point=point,
        lower=values_sorted[lo],
        upper=values_sorted[hi],
        n_replicates=n_replicates,
        n_failed=len(failed),
        failed_indices=failed,
        replicate_values=values,
        seed=int(seed),
    )
