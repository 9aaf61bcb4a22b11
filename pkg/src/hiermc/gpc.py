"""Generalized pairwise comparisons: threshold-aware pair scoring, prioritized
multi-outcome hierarchies, and the cumulative net-treatment-benefit / win-odds
decomposition table.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ConfigError, EmptyArmError
from .inference import ustat_inference
from .trial_data import derive_outcomes, derived_outcome_arrays

OUTCOME_NAMES = ("death", "home", "vfd")
BINARY_OUTCOMES = frozenset({"death", "home"})
DIRECTIONS = ("higher", "lower")

_FIELD_OF = {
    "death": "death",
    "home": "home_at_end",
    "vfd": "ventilator_free_days",
}


@dataclass(frozen=True)
class RuleLevel:
    """One hierarchy level: outcome, which direction is better, win margin."""

    outcome: str
    direction: str
    tau: float = 0.0

    def __post_init__(self):
        if self.outcome not in OUTCOME_NAMES:
            raise ConfigError(f"unknown outcome {self.outcome!r}; expected {OUTCOME_NAMES}")
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be 'higher' or 'lower', got {self.direction!r}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ConfigError(f"tau must be finite and >= 0, got {self.tau}")
        if self.outcome in BINARY_OUTCOMES and self.tau != 0:
            raise ConfigError(f"binary outcome {self.outcome!r} requires tau = 0")


@dataclass(frozen=True)
class ComparisonRule:
    levels: tuple

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("comparison rule needs at least one level")

    def to_json(self):
        return {
            "levels": [
                {"outcome": lv.outcome, "direction": lv.direction, "tau": lv.tau}
                for lv in self.levels
            ]
        }

    @classmethod
    def from_json(cls, obj):
        try:
            levels = obj["levels"]
        except (KeyError, TypeError):
            raise ConfigError("rule JSON must be an object with a 'levels' list")
        return cls(
            tuple(
                RuleLevel(lv["outcome"], lv["direction"], float(lv.get("tau", 0.0)))
                for lv in levels
            )
        )


# Table-1-style prioritized rule of the guiding example: death, then ability
# to be at home at the end of the study, then ventilator-free days with a
# 3-day margin of clinical relevance.
GUIDING_RULE = ComparisonRule(
    (
        RuleLevel("death", "lower", 0.0),
        RuleLevel("home", "higher", 0.0),
        RuleLevel("vfd", "higher", 3.0),
    )
)

# Conventional analysis: single-level WMW on ventilator-free days, whose -1
# death override is already folded into the outcome.
WMW_RULE = ComparisonRule((RuleLevel("vfd", "higher", 0.0),))


def score_pair_level(y_e, y_c, level):
    """Score one pair on one level: +1 E-side win by margin > tau, -1 C-side,
    0 otherwise. Direction is applied before comparison."""
    sign = 1.0 if level.direction == "higher" else -1.0
    d = sign * (float(y_e) - float(y_c))
    if d > level.tau:
        return 1
    if d < -level.tau:
        return -1
    return 0


def score_pair(outcomes_e, outcomes_c, rule):
    """Walk the hierarchy in priority order; the first decisive level wins.

    Returns (score, deciding_level) with deciding_level the 0-based index of
    the decisive level, or (0, None) when every level ties.
    """
    for k, level in enumerate(rule.levels):
        field = _FIELD_OF[level.outcome]
        s = score_pair_level(getattr(outcomes_e, field), getattr(outcomes_c, field), level)
        if s != 0:
            return s, k
    return 0, None


def _level_value_matrix(outcome_arrays, rule):
    """(n, L) float matrix of direction-adjusted outcome values."""
    cols = []
    for level in rule.levels:
        vals = outcome_arrays[level.outcome].astype(np.float64)
        cols.append(vals if level.direction == "higher" else -vals)
    return np.column_stack(cols)


@dataclass(frozen=True)
class GpcLevelRow:
    outcome: str
    direction: str
    tau: float
    pairs_entering: int
    favorable: int
    unfavorable: int
    prop_favorable: float
    prop_unfavorable: float
    prop_neutral: float
    cumulative_ntb: float
    se: float
    ci: tuple
    p: float


@dataclass(frozen=True)
class GpcResult:
    rows: tuple
    n_pairs: int
    wins: int
    losses: int
    ties: int
    prop_win: float
    prop_loss: float
    prop_tie: float
    ntb: float
    win_odds: float
    win_odds_degenerate: bool
    se: float
    ci: tuple
    p: float
    sided: str
    alpha_level: float


def _win_odds(prop_win, prop_loss, prop_tie):
    num = prop_win + 0.5 * prop_tie
    den = prop_loss + 0.5 * prop_tie
    if den == 0.0:
        return math.inf, True
    return num / den, False


def gpc_analyze(data, rule=GUIDING_RULE, alpha_level=0.05, sided="two"):
    """Full prioritized GPC decomposition over all n_E x n_C cross-arm pairs.

    Per-level proportions are reported relative to the total pair count (the
    decomposition-table convention); the CI and p-value of each row refer to
    the cumulative net treatment benefit through that level.
    """
    arrays = derived_outcome_arrays(data)
    idx_e = data.arm_indices("E")
    idx_c = data.arm_indices("C")
    if idx_e.size == 0 or idx_c.size == 0:
        raise EmptyArmError("both arms must be nonempty")

    ye = _level_value_matrix({k: v[idx_e] for k, v in arrays.items()}, rule)
    yc = _level_value_matrix({k: v[idx_c] for k, v in arrays.items()}, rule)
    taus = np.array([lv.tau for lv in rule.levels], dtype=np.float64)

    fav, unfav, row_cum, col_cum = kernels().gpc_pair_scan(ye, yc, taus)

    n_e, n_c = idx_e.size, idx_c.size
    n_pairs = n_e * n_c
    rows = []
    entering = n_pairs
    cum_fav = 0
    cum_unfav = 0
    for k, level in enumerate(rule.levels):
        cum_fav += int(fav[k])
        cum_unfav += int(unfav[k])
        summary = ustat_inference(
            row_means=row_cum[:, k] / n_c,
            col_means=col_cum[:, k] / n_e,
            alpha_level=alpha_level,
            sided=sided,
        )
        neutral_after = entering - int(fav[k]) - int(unfav[k])
        rows.append(
            GpcLevelRow(
                outcome=level.outcome,
                direction=level.direction,
                tau=level.tau,
                pairs_entering=entering,
                favorable=int(fav[k]),
                unfavorable=int(unfav[k]),
                prop_favorable=int(fav[k]) / n_pairs,
                prop_unfavorable=int(unfav[k]) / n_pairs,
                prop_neutral=neutral_after / n_pairs,
                cumulative_ntb=(cum_fav - cum_unfav) / n_pairs,
                se=summary.se,
                ci=summary.ci,
                p=summary.p,
            )
        )
        entering = neutral_after

    ties = entering
    prop_win = cum_fav / n_pairs
    prop_loss = cum_unfav / n_pairs
    prop_tie = ties / n_pairs
    win_odds, degenerate = _win_odds(prop_win, prop_loss, prop_tie)
    last = rows[-1]
    return GpcResult(
        rows=tuple(rows),
        n_pairs=n_pairs,
        wins=cum_fav,
        losses=cum_unfav,
        ties=ties,
        prop_win=prop_win,
        prop_loss=prop_loss,
        prop_tie=prop_tie,
        ntb=last.cumulative_ntb,
        win_odds=win_odds,
        win_odds_degenerate=degenerate,
        se=last.se,
        ci=last.ci,
        p=last.p,
        sided=sided,
        alpha_level=alpha_level,
    )


def conventional_wmw(data, alpha_level=0.05, sided="two"):
    """Wilcoxon-Mann-Whitney analysis of ventilator-free days (death override
    included): identical to gpc_analyze under the single-level tau=0 rule."""
    return gpc_analyze(data, WMW_RULE, alpha_level=alpha_level, sided=sided)


def score_pair_from_trajectories(traj_e, traj_c, rule=GUIDING_RULE):
    """Convenience: derive outcomes and score one cross-arm pair."""
    return score_pair(derive_outcomes(traj_e), derive_outcomes(traj_c), rule)
