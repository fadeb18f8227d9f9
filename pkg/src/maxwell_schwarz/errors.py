"""Exception types."""


class MaxwellSchwarzError(Exception):
    """Base class for package errors."""


class ConfigurationError(MaxwellSchwarzError, ValueError):
    """Invalid parameters or configuration."""


class OutOfDomainError(MaxwellSchwarzError, ValueError):
    """A point lies outside the meshed box."""


class AssemblyError(MaxwellSchwarzError):
    """Degenerate geometry met during assembly."""


class SingularMatrixError(MaxwellSchwarzError, ArithmeticError):
    """Structural or numerical singularity in a factorization."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class NotPositiveDefiniteError(MaxwellSchwarzError, ArithmeticError):
    """Cholesky factorization of a matrix that should be HPD failed."""

    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor
