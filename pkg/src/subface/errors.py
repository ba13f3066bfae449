"""Exception types shared across the package."""


class SubfaceError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SubfaceError):
    """Bad arguments, malformed input files, or a violated precondition."""
