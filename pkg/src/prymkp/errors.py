"""Exception types raised across the package."""

from __future__ import annotations


class PrymKPError(Exception):
    """Base class for every error raised by this package."""


class IncompatibleVariable(PrymKPError):
    pass


class ZeroLeadingTerm(PrymKPError):
    pass


class NonPositiveValuation(PrymKPError):
    pass


class NotMonic(PrymKPError):
    pass


class RamificationMismatch(PrymKPError):
    pass


class NotInHeisenberg(PrymKPError):
    pass


class NotNegative(PrymKPError):
    pass


class InsufficientTruncation(PrymKPError):
    pass


class WindowUnderflow(PrymKPError):
    pass


class DepthTooShallow(PrymKPError):
    pass


class NotBigCell(PrymKPError):
    pass


class NotStabilized(PrymKPError):
    pass


class MismatchError(PrymKPError):
    pass


class NotDifferential(PrymKPError):
    pass


class ValidationError(PrymKPError):
    pass


class ParseError(PrymKPError):
    """Malformed text input; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class NotTotallyRamified(UserWarning):
    """Spectral polynomial has several Puiseux branches at the marked point."""
