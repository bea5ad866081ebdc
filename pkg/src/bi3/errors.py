class Bi3Error(Exception):
    """Base class for errors raised by this package."""


class ParseError(Bi3Error, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PreconditionError(Bi3Error, ValueError):
    """A computation was asked for outside its valid domain."""


class UnsupportedInstanceError(PreconditionError):
    """A minority sample has no other minority sample to act as neighbor."""


class UndefinedCorrelationError(PreconditionError):
    """Rank correlation requested for a sequence without rank variance."""
