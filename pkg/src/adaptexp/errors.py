"""Exception types raised across the package."""


class AdaptexpError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(AdaptexpError, ValueError):
    """A parameter lies outside its admissible domain."""


class OrderingError(InvalidParameterError):
    """Two means were passed in the wrong order."""


class OutOfRangeError(InvalidParameterError):
    """An argument falls outside the range of an invertible map."""


class UnsupportedOperationError(AdaptexpError, TypeError):
    """The operation is not defined for the given reward family."""


class PreconditionError(AdaptexpError, ValueError):
    """An instance violates a structural precondition (e.g. tied best arms)."""


class NumericalError(AdaptexpError, ArithmeticError):
    """A root-finder failed to bracket or converge."""


class ConfigError(AdaptexpError, ValueError):
    """A configuration file is malformed or contains invalid values."""
