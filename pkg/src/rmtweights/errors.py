"""Exception hierarchy shared by every module and mapped to CLI exit codes."""
from __future__ import annotations


class RMTError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RMTError, ValueError):
    """Unsupported or inconsistent configuration (space/density pair, bad flag)."""


class DomainError(RMTError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class DomainMismatchError(DomainError, TypeError):
    """Operands live on incompatible spectral domains or atom families."""


class NumericError(RMTError, ArithmeticError):
    """Non-finite values or a failed numerical invariant."""


class AccuracyError(RMTError):
    """Achieved accuracy is worse than the requested tolerance.

    The best estimate and its error are attached so callers can decide
    whether to accept a degraded answer.
    """

    def __init__(self, message: str, value=None, error: float | None = None):
        super().__init__(message)
        self.value = value
        self.error = error


class ResourceError(RMTError):
    """A configured size cap (term count, grid size) was exceeded."""


class DataError(RMTError, ValueError):
    """Sampled data violates an assumption (empty stream, indefinite matrix)."""
