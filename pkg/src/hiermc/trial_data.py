"""Longitudinal ordinal trial data: domain types, validation, derived scalar
outcomes, empirical state occupancy, and CSV/JSON ingestion.

Guiding 4-state convention: codes 1..4 = dead, on ventilator, in hospital,
at home; higher is more desirable; state 1 is absorbing. Day 0 is baseline
(everyone starts hospitalized in the guiding setting); outcome counting runs
over days 1..horizon. General K-state scales are supported through
``StateSpace``.
"""

import csv
import hashlib
import io
import json
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DatasetValidationError, EmptyArmError

ARMS = ("E", "C")
CSV_HEADER = ("patient_id", "arm", "day", "state")

ABSORBING_VIOLATION = "ABSORBING_VIOLATION"
HORIZON_MISMATCH = "HORIZON_MISMATCH"
DUPLICATE_ID = "DUPLICATE_ID"
STATE_OUT_OF_RANGE = "STATE_OUT_OF_RANGE"

Violation = namedtuple("Violation", ["patient_id", "day", "rule"])


@dataclass(frozen=True)
class HealthState:
    code: int
    label: str
    absorbing: bool = False


@dataclass(frozen=True)
class StateSpace:
    """Ordered health-state scale; code k is the k-th least desirable."""

    states: tuple

    def __post_init__(self):
        codes = [s.code for s in self.states]
        if codes != list(range(1, len(codes) + 1)):
            raise DataError(f"state codes must be 1..K contiguous, got {codes}")

    @property
    def n_states(self):
        return len(self.states)

    @property
    def absorbing(self):
        return tuple(s.code for s in self.states if s.absorbing)

    @property
    def labels(self):
        return {s.code: s.label for s in self.states}

    def to_descriptor(self):
        return {
            "n_states": self.n_states,
            "absorbing_states": list(self.absorbing),
            "state_labels": {str(s.code): s.label for s in self.states},
        }

    @classmethod
    def from_descriptor(cls, obj):
        n = int(obj["n_states"])
        absorbing = {int(a) for a in obj.get("absorbing_states", [1])}
        labels = {int(k): v for k, v in obj.get("state_labels", {}).items()}
        return cls(
            tuple(
                HealthState(code, labels.get(code, f"state_{code}"), code in absorbing)
                for code in range(1, n + 1)
            )
        )


GUIDING_STATE_SPACE = StateSpace(
    (
        HealthState(1, "dead", absorbing=True),
        HealthState(2, "ventilator"),
        HealthState(3, "hospital"),
        HealthState(4, "home"),
    )
)


@dataclass(frozen=True, eq=False)
class PatientTrajectory:
    """One patient's arm assignment and daily state path (day 0 = baseline)."""

    patient_id: str
    arm: str
    states: np.ndarray


class TrialDataset:
    """Immutable two-arm longitudinal dataset.

    Stores the state paths as one (n_patients, horizon+1) int64 matrix so the
    analysis kernels can work on contiguous arrays; `trajectories()` exposes
    the per-patient view.
    """

    def __init__(self, patient_ids, arms, states, state_space=GUIDING_STATE_SPACE):
        states = np.ascontiguousarray(np.asarray(states, dtype=np.int64))
        if states.ndim != 2 or states.shape[1] < 2:
            raise DataError("states must be (n_patients, horizon+1) with horizon >= 1")
        if len(patient_ids) != states.shape[0] or len(arms) != states.shape[0]:
            raise DataError("patient_ids/arms length must match the states matrix")
        bad = sorted(set(arms) - set(ARMS))
        if bad:
            raise DataError(f"arm labels must be in {ARMS}, got {bad}", code="ARM_INVALID")
        self.patient_ids = tuple(str(p) for p in patient_ids)
        self.arms = np.asarray(arms, dtype="U1")
        states.setflags(write=False)
        self.states = states
        self.state_space = state_space

    @property
    def n_patients(self):
        return self.states.shape[0]

    @property
    def horizon_days(self):
        return self.states.shape[1] - 1

    @property
    def arm_sizes(self):
        return {arm: int(np.count_nonzero(self.arms == arm)) for arm in ARMS}

    def arm_indices(self, arm):
        return np.flatnonzero(self.arms == arm)

    def arm_states(self, arm):
        return self.states[self.arm_indices(arm)]

    def trajectories(self):
        for i, pid in enumerate(self.patient_ids):
            yield PatientTrajectory(pid, str(self.arms[i]), self.states[i])

    @classmethod
    def from_trajectories(cls, trajectories, state_space=GUIDING_STATE_SPACE):
        trajectories = list(trajectories)
        if not trajectories:
            raise DataError("empty trajectory collection")
        lengths = {len(t.states) for t in trajectories}
        if len(lengths) > 1:
            width = len(trajectories[0].states)
            bad = [
                Violation(t.patient_id, None, HORIZON_MISMATCH)
                for t in trajectories
                if len(t.states) != width
            ]
            raise DatasetValidationError(bad)
        return cls(
            [t.patient_id for t in trajectories],
            [t.arm for t in trajectories],
            np.vstack([np.asarray(t.states, dtype=np.int64) for t in trajectories]),
            state_space,
        )


def dataset_violations(data):
    """All PatientTrajectory invariant violations, in patient order."""
    violations = []
    seen = set()
    for pid in data.patient_ids:
        if pid in seen:
            violations.append(Violation(pid, None, DUPLICATE_ID))
        seen.add(pid)
    n_states = data.state_space.n_states
    absorbing = set(data.state_space.absorbing)
    for i, pid in enumerate(data.patient_ids):
        row = data.states[i]
        out = (row < 1) | (row > n_states)
        for day in np.flatnonzero(out):
            violations.append(Violation(pid, int(day), STATE_OUT_OF_RANGE))
        locked = None
        for day, state in enumerate(row):
            if locked is not None and state != locked:
                violations.append(Violation(pid, int(day), ABSORBING_VIOLATION))
            elif locked is None and int(state) in absorbing:
                locked = int(state)
    return violations


def validate_dataset(data):
    """Return ``data`` unchanged iff every invariant holds; raise otherwise."""
    violations = dataset_violations(data)
    if violations:
        raise DatasetValidationError(violations)
    return data


@dataclass(frozen=True)
class DerivedOutcomes:
    """Scalar endpoints for the guiding composite: death indicator, at-home-
    at-end indicator, and ventilator-free days over days 1..horizon (-1 when
    death occurred, the overriding worst category)."""

    death: int
    home_at_end: int
    ventilator_free_days: int


def derive_outcomes(trajectory):
    states = np.asarray(trajectory.states, dtype=np.int64)
    death = int(np.any(states == 1))
    home = int(states[-1] == len(GUIDING_STATE_SPACE.states)) if death == 0 else 0
    if death:
        vfd = -1
    else:
        vfd = int(np.count_nonzero(states[1:] != 2))
    return DerivedOutcomes(death, home, vfd)


def derived_outcome_arrays(data):
    """Vectorized derive_outcomes over a dataset.

    Returns a dict with int64 arrays ``death``, ``home``, ``vfd`` aligned
    with patient order. ``home`` means "alive and at home on the last day";
    the home code is the top state of the scale.
    """
    states = data.states
    top = data.state_space.n_states
    death = np.any(states == 1, axis=1)
    home = (states[:, -1] == top) & ~death
    vfd = np.count_nonzero(states[:, 1:] != 2, axis=1)
    vfd = np.where(death, -1, vfd)
    return {
        "death": death.astype(np.int64),
        "home": home.astype(np.int64),
        "vfd": vfd.astype(np.int64),
    }


def empirical_state_counts(data):
    """Per-arm (horizon+1, K) matrices of patient counts by day and state."""
    out = {}
    n_states = data.state_space.n_states
    for arm in ARMS:
        rows = data.arm_states(arm)
        if rows.shape[0] == 0:
            raise EmptyArmError(f"arm {arm} has no patients")
        counts = np.zeros((data.horizon_days + 1, n_states), dtype=np.int64)
        for day in range(data.horizon_days + 1):
            counts[day] = np.bincount(rows[:, day], minlength=n_states + 1)[1:]
        out[arm] = counts
    return out


def empirical_sop(data):
    """Per-arm empirical state occupancy proportions, (horizon+1, K)."""
    counts = empirical_state_counts(data)
    return {arm: mat / mat.sum(axis=1, keepdims=True) for arm, mat in counts.items()}


def _canonical_rows(data):
    order = sorted(range(data.n_patients), key=lambda i: data.patient_ids[i])
    for i in order:
        pid = data.patient_ids[i]
        arm = str(data.arms[i])
        for day in range(data.horizon_days + 1):
            yield pid, arm, day, int(data.states[i, day])


def dataset_fingerprint(data):
    """sha256 over the id-sorted long-format rows (order-independent hash)."""
    h = hashlib.sha256()
    for pid, arm, day, state in _canonical_rows(data):
        h.update(f"{pid},{arm},{day},{state}\n".encode())
    return h.hexdigest()


def dataset_descriptor(data, rng_info=None):
    desc = {
        "format": "hiermc-dataset",
        "version": 1,
        "horizon_days": data.horizon_days,
    }
    desc.update(data.state_space.to_descriptor())
    if rng_info is not None:
        desc["rng"] = dict(rng_info)
    return desc


def write_dataset_csv(data, csv_path, descriptor_path=None, rng_info=None):
    """Write the long-format CSV plus its JSON descriptor.

    Rows are written in dataset patient order, day ascending; header is
    exactly ``patient_id,arm,day,state``; LF line endings.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, pid in enumerate(data.patient_ids):
        arm = str(data.arms[i])
        for day in range(data.horizon_days + 1):
            writer.writerow([pid, arm, day, int(data.states[i, day])])
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    if descriptor_path is None:
        descriptor_path = _descriptor_path_for(csv_path)
    desc = dataset_descriptor(data, rng_info=rng_info)
    with open(descriptor_path, "w", encoding="utf-8") as fh:
        json.dump(desc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, descriptor_path


def _descriptor_path_for(csv_path):
    text = str(csv_path)
    if text.endswith(".csv"):
        return text[: -len(".csv")] + ".json"
    return text + ".json"


def read_dataset_csv(csv_path, descriptor_path=None):
    """Load and validate a dataset from CSV + JSON descriptor."""
    if descriptor_path is None:
        descriptor_path = _descriptor_path_for(csv_path)
    with open(descriptor_path, encoding="utf-8") as fh:
        desc = json.load(fh)
    state_space = StateSpace.from_descriptor(desc)
    horizon = int(desc["horizon_days"])

    per_patient = {}
    arms = {}
    order = []
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(
                f"CSV header must be exactly {','.join(CSV_HEADER)}", code="BAD_HEADER"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"line {lineno}: expected 4 fields", code="BAD_ROW")
            pid, arm, day_s, state_s = (field.strip() for field in row)
            try:
                day = int(day_s)
                state = int(state_s)
            except ValueError:
                raise DataError(f"line {lineno}: day/state must be integers", code="BAD_ROW")
            if pid not in per_patient:
                per_patient[pid] = {}
                arms[pid] = arm
                order.append(pid)
            elif arms[pid] != arm:
                raise DataError(
                    f"patient {pid!r} has inconsistent arm labels", code="ARM_INVALID"
                )
            if day in per_patient[pid]:
                raise DatasetValidationError([Violation(pid, day, HORIZON_MISMATCH)])
            per_patient[pid][day] = state

    violations = []
    states = np.zeros((len(order), horizon + 1), dtype=np.int64)
    for i, pid in enumerate(order):
        days = per_patient[pid]
        expected = set(range(horizon + 1))
        if set(days) != expected:
            missing = sorted(expected - set(days)) + sorted(set(days) - expected)
            violations.append(Violation(pid, missing[0] if missing else None, HORIZON_MISMATCH))
            continue
        for day, state in days.items():
            states[i, day] = state
    if violations:
        raise DatasetValidationError(violations)

    data = TrialDataset(order, [arms[p] for p in order], states, state_space)
    return validate_dataset(data)
