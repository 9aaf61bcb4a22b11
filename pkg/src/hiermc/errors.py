"""Exception hierarchy shared across the package.

Three branches map onto the CLI exit codes: configuration problems (exit 2),
dataset-content problems (exit 3), numerical failures (exit 4).
"""


class HiermcError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "ERROR"

    def __init__(self, message, code=None, detail=None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.detail = detail or {}


class ConfigError(HiermcError):
    """Bad rule/spec/model/config input, bad paths, bad CLI arguments."""

    code = "CONFIG_ERROR"


class SpecGapError(ConfigError):
    code = "SPEC_GAP"


class SpecOverlapError(ConfigError):
    code = "SPEC_OVERLAP"


class WeightLengthMismatchError(ConfigError):
    code = "WEIGHT_LENGTH_MISMATCH"


class InvalidTransitionRowError(ConfigError):
    code = "INVALID_TRANSITION_ROW"


class DataError(HiermcError):
    """Dataset content violates the trial-data contract."""

    code = "DATA_ERROR"


class DatasetValidationError(DataError):
    """Carries the full violation list (patient_id, day, rule)."""

    code = "VALIDATION_FAILED"

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ", ".join(
            f"{v.rule}(patient={v.patient_id!r}, day={v.day})" for v in self.violations[:5]
        )
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"dataset validation failed: {lines}{more}")


class EmptyArmError(DataError):
    code = "EMPTY_ARM"


class HorizonMismatchError(DataError):
    code = "HORIZON_MISMATCH"


class NumericalError(HiermcError):
    code = "NUMERICAL_ERROR"


class InvalidCumulativeError(NumericalError):
    """Parameter vector yields a non-monotone cumulative probability path."""

    code = "INVALID_CUMULATIVE"


class NonConvergenceError(NumericalError):
    code = "NONCONVERGENCE"


class AllReplicatesFailedError(NumericalError):
    code = "ALL_REPLICATES_FAILED"


class MethodFigureMismatchError(ConfigError):
    code = "METHOD_FIGURE_MISMATCH"


class NotADownsetError(ConfigError):
    code = "NOT_A_DOWNSET"
