"""Exception taxonomy shared across the package.

CLI exit codes map onto these: configuration errors exit 4, budget
exhaustion 2, precondition failures 3, strict-mode invariant violations 5.
"""


class ConfigurationError(ValueError):
    """Invalid model parameters, run configuration, or catalog request."""


class DomainError(ValueError):
    """Numeric argument outside the mathematical domain of an operation."""


class OutOfRangeError(ValueError):
    """Inverse queried beyond the range of the function it inverts."""


class PreconditionError(ValueError):
    """A documented operation precondition does not hold."""


class BudgetExceededError(RuntimeError):
    """Iteration or oracle-call budget exhausted before the stopping rule."""


class DomainViolationError(RuntimeError):
    """A point left the open feasible set; carries the offending coordinate."""

    def __init__(self, message: str, coordinate: int | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class SafetyViolationError(RuntimeError):
    """A step-size or monotonicity contract was breached during a run."""


class InvariantViolationError(RuntimeError):
    """A runtime certificate failed while running in strict mode."""

    def __init__(self, message: str, flags: int = 0):
        super().__init__(message)
        self.flags = flags
