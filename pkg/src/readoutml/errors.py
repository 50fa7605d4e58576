"""Exception taxonomy shared across the library.

The CLI maps these onto exit codes: invalid inputs and unreadable data are
"data" failures (exit 3), numerical breakdowns are exit 4.
"""


class ReadoutmlError(Exception):
    """Base class for library errors."""


class InvalidSpecError(ReadoutmlError, ValueError):
    """A configuration or dataset specification is structurally invalid."""


class DataFormatError(ReadoutmlError, ValueError):
    """A serialized artifact is missing, truncated, or inconsistent."""


class IntegrationDivergedError(ReadoutmlError, FloatingPointError):
    """The pointer-state integrator produced non-finite values."""


class SingularCovarianceError(ReadoutmlError):
    """A fitted covariance is numerically singular.

    Carries the estimated condition number so callers can decide between
    shrinkage and dimensionality reduction.
    """

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class ConvergenceError(ReadoutmlError):
    """An iterative solver hit its iteration budget before reaching tolerance."""

    def __init__(self, message: str, max_violation: float = float("nan")):
        super().__init__(message)
        self.max_violation = max_violation


class DegenerateKernelError(ReadoutmlError):
    """The matched-filter kernel is identically zero or has zero-variance bins."""


class StratificationError(ReadoutmlError, ValueError):
    """Cross-validation folds cannot all contain every class."""


class EmptyPoolError(ReadoutmlError):
    """A replacement draw was requested from an empty candidate pool."""


class FitFailedError(ReadoutmlError):
    """A statistical fit collapsed or failed to produce usable parameters."""


class UndefinedFidelityError(ReadoutmlError, ValueError):
    """Assignment fidelity is undefined because a class is absent."""
