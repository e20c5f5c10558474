"""Exception types shared across the toolkit.

Callers that need to map failures onto process exit codes can rely on the
split below: ConeSpecError covers malformed cone descriptions and input
files, NumericalGuardError covers iteration caps and conditioning guards
tripping inside the numerics.
"""


class ConeVolError(Exception):
    """Base class for all toolkit errors."""


class ConeSpecError(ConeVolError):
    """Malformed cone description (grammar, CSV input, dimension fields)."""


class DimensionMismatchError(ConeVolError):
    """Point dimension does not match the cone's ambient dimension."""


class NumericalGuardError(ConeVolError):
    """A numerical safety guard tripped (non-convergence, conditioning)."""


class NonConvergenceError(NumericalGuardError):
    """An iterative routine hit its iteration cap before converging."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class ConditioningError(NumericalGuardError):
    """A linear system was too ill-conditioned for the requested accuracy."""


class UnsupportedConeError(ConeVolError):
    """The requested operation is not defined for this cone variant."""
