"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad argument: wrong length, mismatched field, missing file."""


class ValidationError(UsageError):
    """A parameter profile violates one or more constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid profile:\n  " + "\n  ".join(self.violations))


class DomainError(ArithmeticError):
    """Operation undefined at this input (inverse of zero)."""


class InfeasibleError(ArithmeticError):
    """A linear system has no solution."""


class EncodingError(RuntimeError):
    """The encoder could not complete after its retry budget."""

    def __init__(self, message, round_index=None, role=None):
        self.round_index = round_index
        self.role = role
        super().__init__(message)


class ExperimentAborted(RuntimeError):
    """A tampering experiment hit too many encoder failures."""
