"""Exception hierarchy shared by every module."""


class GermfibError(Exception):
    """Base class for all errors raised by germfib."""


class StructuralError(GermfibError):
    """Operands live in incompatible variable tables."""


class DomainError(GermfibError, ValueError):
    """An argument lies outside the domain of an operation."""


class ParseError(GermfibError):
    """Malformed polynomial, cocycle or ideal text."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class TruncationWindowError(GermfibError):
    """An x-exponent escaped the configured window during composition."""


class CapacityError(GermfibError):
    """A configurable resource cap was exceeded."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EngineDefect(GermfibError):
    """An internal consistency assertion failed. Never an input condition."""


class VerificationMismatch(GermfibError):
    """A reproduced computation disagrees with its expected value."""

    def __init__(self, message, expected=None, actual=None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class Cancelled(GermfibError):
    """Raised when a caller-supplied cancellation token fires."""
