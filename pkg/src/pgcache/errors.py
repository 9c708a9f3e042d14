"""Exception hierarchy for pgcache."""


class PgCacheError(Exception):
    """Base class for every error raised by this package."""


class NotPrimePower(PgCacheError, ValueError):
    pass


class DimensionMismatch(PgCacheError, ValueError):
    pass


class OutOfRange(PgCacheError, ValueError):
    pass


class InvalidParameters(PgCacheError, ValueError):
    pass


class InstanceTooLarge(PgCacheError):
    pass


class InternalInconsistency(PgCacheError, AssertionError):
    pass


class UnknownVertex(PgCacheError, KeyError):
    pass


class InvalidInput(PgCacheError, ValueError):
    pass


class ParseError(PgCacheError, ValueError):
    """Malformed PDA file. ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SizeMismatch(PgCacheError, ValueError):
    pass


class InvalidDemand(PgCacheError, ValueError):
    pass


class NotRegular(PgCacheError, ValueError):
    pass


class DecodeFailure(PgCacheError):
    """A user could not recover a subfile.

    ``user`` and ``subfile`` identify the first unrecoverable position.
    """

    def __init__(self, message, user=None, subfile=None):
        super().__init__(message)
        self.user = user
        self.subfile = subfile
