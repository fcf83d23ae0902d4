"""Exception hierarchy shared by every module."""


class WcodaError(Exception):
    """Base class for all package errors."""

    kind = "error"


class ParseError(WcodaError):
    """Malformed input text. Carries the offending line number when known."""

    kind = "parse"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructuralError(WcodaError):
    """Axes of a table are inconsistent (gaps, non-contiguous ages, ragged rows)."""

    kind = "structure"


class DomainError(WcodaError, ValueError):
    """A value lies outside the domain an operation is defined on."""

    kind = "domain"
