"""Exception hierarchy shared by all memlang modules."""


class MemlangError(Exception):
    """Base class for all errors raised by memlang."""


class DomainError(MemlangError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(MemlangError, ValueError):
    """Invalid or inconsistent run configuration."""


class UnsupportedOrderError(MemlangError, ValueError):
    """A kernel kind does not support the requested expansion order."""


class UnsupportedKindError(MemlangError, ValueError):
    """An operation was invoked with a kernel kind it does not handle."""


class NumericError(MemlangError, RuntimeError):
    """A quadrature or series extraction failed to converge."""


class IntegrationDivergedError(MemlangError, RuntimeError):
    """A trajectory left the finite range; carries the failing step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class IllPosedTruncationError(MemlangError, RuntimeError):
    """The truncated equation lost well-posedness (e.g. effective mass <= 0)."""
