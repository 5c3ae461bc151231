"""Exception types shared across the package."""


class LogGasError(Exception):
    """Base class for all package-specific errors."""


class DomainError(LogGasError):
    """An argument lies outside the domain where an operation is defined."""


class AccuracyError(LogGasError):
    """A numerical procedure failed to reach its accuracy target.

    Carries the achieved residual when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoConvergenceError(LogGasError):
    """An iterative solver did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegeneracyError(LogGasError):
    """The model violates a genericity assumption (vanishing density factor,
    singular mode system, non-positive-definite matrix)."""


class ConsistencyError(LogGasError):
    """An internal cross-check failed (e.g. total mass far from one)."""


class InsufficientDataError(LogGasError):
    """Too few effective samples to produce a statistic."""


class ConfigError(LogGasError):
    """Malformed run configuration."""
