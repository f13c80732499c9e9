"""Exception types shared across the package."""


class MagpicError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MagpicError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigError(MagpicError):
    """A configuration value violates a documented invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SolverError(MagpicError):
    """A linear solve failed to meet its residual contract."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class DiagnosticError(MagpicError):
    """A diagnostic cannot be computed from the given data."""
