"""Exception hierarchy for dioph-spectrum.

Every error raised by the library derives from :class:`DiophantineError`
and carries the process exit code the CLI uses for it.
"""

from typing import Any


class DiophantineError(Exception):
    """Base class for all library errors."""

    exit_code: int = 2

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for reports and JSON logs."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
            "exit_code": self.exit_code,
        }


class ExpressionSyntaxError(DiophantineError):
    """Text does not match the real-number grammar."""


class DomainError(DiophantineError):
    """A value is outside the domain of the requested object or operation."""


class FormatError(DiophantineError):
    """An on-disk file does not match its schema or violates an invariant."""


class OutOfDomain(DiophantineError):
    """Evaluation of a piecewise-linear function outside its domain."""


class RegionError(DiophantineError):
    """A construction was asked for a target outside its region."""


class SpectrumError(RegionError):
    """A target pair lies outside the joint spectrum."""


class PrecisionBudgetExceeded(DiophantineError):
    """Refinement hit its retry cap before reaching the requested precision."""

    exit_code = 3


class DegeneratePair(DiophantineError):
    """1, xi, eta are rationally dependent on a scanned point."""

    exit_code = 4


class InsufficientData(DiophantineError):
    """Not enough points, change points or filtered indices for an estimate."""

    exit_code = 5


class AlphaTooLarge(InsufficientData):
    """The level alpha is not below the finite-horizon psi-bar."""


class RegimeMismatch(DiophantineError):
    """The data is outside the regime where an estimator applies."""

    exit_code = 5


class RangeError(DiophantineError):
    """A parametric query is outside the range certified by the data."""

    exit_code = 5


class QTooLarge(DiophantineError):
    """Parameter q exceeds the desk-scale cap."""

    exit_code = 6


class IoError(DiophantineError):
    """A file could not be read or written."""
