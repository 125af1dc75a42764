"""Exception hierarchy shared across the package."""


class OverallPriorError(Exception):
    """Base class for all package-specific errors."""


class DomainError(OverallPriorError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EvaluationError(OverallPriorError, RuntimeError):
    """A user-supplied callable returned a non-finite value.

    Carries the offending abscissa in ``abscissa``.
    """

    def __init__(self, message, abscissa):
        super().__init__(message)
        self.abscissa = abscissa


class AccuracyError(OverallPriorError, RuntimeError):
    """A numerical routine failed to reach the requested tolerance.

    ``best_estimate`` holds the most accurate value obtained before
    giving up, ``error_estimate`` the associated error bound.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class PreconditionError(OverallPriorError, ValueError):
    """A documented precondition of an operation is not met."""


class BoundaryModeError(PreconditionError):
    """The requested posterior mode sits at the a=0 boundary (r0 <= 1)."""


class SingularityError(DomainError):
    """A density was evaluated at a point where it is singular."""


class DegenerateDataError(PreconditionError):
    """The data admit only a degenerate posterior (e.g. zero variance)."""
