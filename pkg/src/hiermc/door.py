"""Desirability-of-outcome-ranking analysis: ranked outcome partitions,
per-arm category summaries, DOOR-probability inference, and the per-day
longitudinal weighted-average extension.
"""

import ast
import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import (
    ConfigError,
    EmptyArmError,
    SpecGapError,
    SpecOverlapError,
    WeightLengthMismatchError,
)
from .inference import UStatSummary, ustat_inference
from .trial_data import derived_outcome_arrays

_PREDICATE_VARS = ("death", "home", "vfd")
_ALLOWED_CMP = (ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq)


class OutcomePredicate:
    """Boolean expression over (death, home, vfd).

    Grammar: comparisons (<, <=, >, >=, ==, !=) between an outcome name and
    an integer literal, optionally chained (``10 <= vfd <= 25``), combined
    with ``and`` only. Anything else is rejected at parse time.
    """

    def __init__(self, expression):
        self.expression = expression
        try:
            tree = ast.parse(expression, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"bad predicate {expression!r}: {exc.msg}", code="BAD_PREDICATE")
        self._validate(tree.body)
        self._code = compile(tree, "<door-predicate>", "eval")

    def _validate(self, node):
        if isinstance(node, ast.BoolOp):
            if not isinstance(node.op, ast.And):
                raise ConfigError(
                    f"predicate {self.expression!r}: only 'and' is allowed",
                    code="BAD_PREDICATE",
                )
            for v in node.values:
                self._validate(v)
            return
        if isinstance(node, ast.Compare):
            for op in node.ops:
                if not isinstance(op, _ALLOWED_CMP):
                    raise ConfigError(
                        f"predicate {self.expression!r}: operator not allowed",
                        code="BAD_PREDICATE",
                    )
            for leaf in [node.left, *node.comparators]:
                self._validate_leaf(leaf)
            return
        raise ConfigError(
            f"predicate {self.expression!r}: only comparisons joined by 'and'",
            code="BAD_PREDICATE",
        )

    def _validate_leaf(self, node):
        if isinstance(node, ast.Name) and node.id in _PREDICATE_VARS:
            return
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return
        if (
            isinstance(node, ast.UnaryOp)
            and isinstance(node.op, ast.USub)
            and isinstance(node.operand, ast.Constant)
            and isinstance(node.operand.value, int)
        ):
            return
        raise ConfigError(
            f"predicate {self.expression!r}: operands must be outcome names "
            f"{_PREDICATE_VARS} or integer literals",
            code="BAD_PREDICATE",
        )

    def __call__(self, death, home, vfd):
        return bool(
            eval(self._code, {"__builtins__": {}}, {"death": death, "home": home, "vfd": vfd})
        )

    def __repr__(self):
        return f"OutcomePredicate({self.expression!r})"


@dataclass(frozen=True)
class DoorCategory:
    rank: int
    label: str
    predicate: OutcomePredicate


@dataclass(frozen=True)
class DoorSpec:
    """Ordered partition of the outcome space; rank M is most desirable."""

    categories: tuple

    def __post_init__(self):
        ranks = [c.rank for c in self.categories]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ConfigError(f"category ranks must be 1..M contiguous, got {ranks}")

    @property
    def n_categories(self):
        return len(self.categories)

    def to_json(self):
        return {
            "categories": [
                {"rank": c.rank, "label": c.label, "predicate": c.predicate.expression}
                for c in self.categories
            ]
        }

    @classmethod
    def from_json(cls, obj):
        try:
            cats = obj["categories"]
        except (KeyError, TypeError):
            raise ConfigError("DOOR spec JSON must be an object with a 'categories' list")
        return cls(
            tuple(
                DoorCategory(int(c["rank"]), str(c["label"]), OutcomePredicate(c["predicate"]))
                for c in sorted(cats, key=lambda c: int(c["rank"]))
            )
        )


def guiding_example_spec():
    """The 7-category ranking of the guiding example (cutoffs 10 and 25 on
    ventilator-free days, boundaries inclusive in the middle band)."""
    rows = (
        (1, "Dead", "death == 1"),
        (2, "Alive, not returning home, v-f. days less than 10",
         "death == 0 and home == 0 and vfd < 10"),
        (3, "Alive, not returning home, v-f. days between 10 and 25",
         "death == 0 and home == 0 and 10 <= vfd <= 25"),
        (4, "Alive, returning home, v-f. days less than 10",
         "death == 0 and home == 1 and vfd < 10"),
        (5, "Alive, not returning home, v-f. days more than 25",
         "death == 0 and home == 0 and vfd > 25"),
        (6, "Alive, returning home, v-f. days between 10 and 25",
         "death == 0 and home == 1 and 10 <= vfd <= 25"),
        (7, "Alive, returning home, v-f. days more than 25",
         "death == 0 and home == 1 and vfd > 25"),
    )
    return DoorSpec(
        tuple(DoorCategory(rank, label, OutcomePredicate(expr)) for rank, label, expr in rows)
    )


def reachable_outcome_grid(horizon_days):
    """All (death, home, vfd) triples a valid trajectory can produce."""
    cells = [(1, 0, -1)]
    for home in (0, 1):
        for vfd in range(0, horizon_days + 1):
            cells.append((0, home, vfd))
    return cells


def validate_spec(spec, horizon_days):
    """Check mutual exclusivity and exhaustiveness by enumerating the finite
    reachable outcome grid; raises SpecGapError/SpecOverlapError."""
    for cell in reachable_outcome_grid(horizon_days):
        hits = [c.rank for c in spec.categories if c.predicate(*cell)]
        if not hits:
            raise SpecGapError(f"no DOOR category matches outcome {cell}",
                               detail={"cell": list(cell)})
        if len(hits) > 1:
            raise SpecOverlapError(
                f"outcome {cell} matches categories {hits}",
                detail={"cell": list(cell), "ranks": hits},
            )
    return spec


def map_to_door(outcomes, spec):
    """Rank of the unique category containing ``outcomes``."""
    cell = (outcomes.death, outcomes.home_at_end, outcomes.ventilator_free_days)
    hits = [c.rank for c in spec.categories if c.predicate(*cell)]
    if not hits:
        raise SpecGapError(f"no DOOR category matches outcome {cell}",
                           detail={"cell": list(cell)})
    if len(hits) > 1:
        raise SpecOverlapError(f"outcome {cell} matches categories {hits}",
                               detail={"cell": list(cell), "ranks": hits})
    return hits[0]


def _rank_array(arrays, spec):
    death, home, vfd = arrays["death"], arrays["home"], arrays["vfd"]
    ranks = np.zeros(death.size, dtype=np.int64)
    cache = {}
    for i in range(death.size):
        cell = (int(death[i]), int(home[i]), int(vfd[i]))
        if cell not in cache:
            hits = [c.rank for c in spec.categories if c.predicate(*cell)]
            if len(hits) != 1:
                raise SpecGapError(f"outcome {cell} matches {len(hits)} categories",
                                   detail={"cell": list(cell)})
            cache[cell] = hits[0]
        ranks[i] = cache[cell]
    return ranks


@dataclass(frozen=True)
class DoorResult:
    n_pairs: int
    wins: int
    losses: int
    ties: int
    prop_win: float
    prop_loss: float
    prop_tie: float
    door_prob: float
    delta: float
    theta: float
    theta_degenerate: bool
    category_counts: dict
    arm_sizes: dict
    ci_prob: tuple
    ci_scale: str
    summary: UStatSummary


def door_analyze(data, spec=None, alpha_level=0.05, sided="two", ci_scale="probability"):
    """Map every patient to a DOOR category, summarize per arm, and run the
    all-pairs WMW analysis of the ranked outcome.

    The DOOR-probability CI is the affine image of the NTB CI by default;
    ``ci_scale="logit"`` gives the delta-method logit interval instead (the
    probability-scale interval is symmetric, the logit one is not).
    """
    if spec is None:
        spec = guiding_example_spec()
    if ci_scale not in ("probability", "logit"):
        raise ConfigError(f"ci_scale must be 'probability' or 'logit', got {ci_scale!r}")
    validate_spec(spec, data.horizon_days)
    arrays = derived_outcome_arrays(data)
    idx_e = data.arm_indices("E")
    idx_c = data.arm_indices("C")
    if idx_e.size == 0 or idx_c.size == 0:
        raise EmptyArmError("both arms must be nonempty")

    ranks = _rank_array(arrays, spec)
    ranks_e, ranks_c = ranks[idx_e], ranks[idx_c]
    counts = {
        arm: np.bincount(r, minlength=spec.n_categories + 1)[1:]
        for arm, r in (("E", ranks_e), ("C", ranks_c))
    }

    fav, unfav, row_cum, col_cum = kernels().gpc_pair_scan(
        ranks_e[:, None].astype(np.float64),
        ranks_c[:, None].astype(np.float64),
        np.zeros(1),
    )
    n_e, n_c = idx_e.size, idx_c.size
    n_pairs = n_e * n_c
    wins, losses = int(fav[0]), int(unfav[0])
    ties = n_pairs - wins - losses
    door_prob = (wins + 0.5 * ties) / n_pairs
    delta = (wins - losses) / n_pairs
    if door_prob >= 1.0:
        theta, degenerate = math.inf, True
    else:
        theta, degenerate = door_prob / (1.0 - door_prob), False

    summary = ustat_inference(
        row_means=row_cum[:, 0] / n_c,
        col_means=col_cum[:, 0] / n_e,
        alpha_level=alpha_level,
        sided=sided,
    )
    if ci_scale == "probability":
        ci_prob = ((1.0 + summary.ci[0]) / 2.0, (1.0 + summary.ci[1]) / 2.0)
    else:
        ci_prob = _logit_ci(door_prob, summary)

    return DoorResult(
        n_pairs=n_pairs,
        wins=wins,
        losses=losses,
        ties=ties,
        prop_win=wins / n_pairs,
        prop_loss=losses / n_pairs,
        prop_tie=ties / n_pairs,
        door_prob=door_prob,
        delta=delta,
        theta=theta,
        theta_degenerate=degenerate,
        category_counts=counts,
        arm_sizes={"E": n_e, "C": n_c},
        ci_prob=ci_prob,
        ci_scale=ci_scale,
        summary=summary,
    )


def _logit_ci(prob, summary):
    from statistics import NormalDist

    se_prob = summary.se / 2.0
    if summary.degenerate or prob <= 0.0 or prob >= 1.0:
        return (prob, prob)
    se_logit = se_prob / (prob * (1.0 - prob))
    zq = NormalDist().inv_cdf(1.0 - summary.alpha_level / 2.0)
    lo = math.log(prob / (1 - prob)) - zq * se_logit
    hi = math.log(prob / (1 - prob)) + zq * se_logit
    return (1.0 / (1.0 + math.exp(-lo)), 1.0 / (1.0 + math.exp(-hi)))


@dataclass(frozen=True)
class LongitudinalDoorResult:
    per_day_delta: np.ndarray
    weights: np.ndarray
    weighted_ntb: float
    n_pairs: int


def longitudinal_door(data, weights=None):
    """Per-day net benefit on the daily ordinal state scale, combined as a
    weighted average over days 1..horizon (uniform weights by default)."""
    idx_e = data.arm_indices("E")
    idx_c = data.arm_indices("C")
    if idx_e.size == 0 or idx_c.size == 0:
        raise EmptyArmError("both arms must be nonempty")
    n_days = data.horizon_days
    if weights is None:
        weights = np.full(n_days, 1.0 / n_days)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.size != n_days:
            raise WeightLengthMismatchError(
                f"expected {n_days} weights (days 1..{n_days}), got {weights.size}"
            )
        if not np.all(np.isfinite(weights)):
            raise WeightLengthMismatchError("weights must be finite")

    se = np.ascontiguousarray(data.states[idx_e, 1:])
    sc = np.ascontiguousarray(data.states[idx_c, 1:])
    wins, losses = kernels().daily_state_scan(se, sc)
    n_pairs = idx_e.size * idx_c.size
    per_day = (wins - losses) / n_pairs
    return LongitudinalDoorResult(
        per_day_delta=per_day,
        weights=weights,
        weighted_ntb=float(np.dot(weights, per_day)),
        n_pairs=n_pairs,
    )
