"""Exception types raised across the package."""


class GigmixError(Exception):
    """Base class for all package errors."""


class DomainError(GigmixError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """An argument lies outside the supported numerical envelope."""


class NonNormalizableError(GigmixError, ArithmeticError):
    """The requested density has a divergent partition function."""


class NoSolutionError(GigmixError, ArithmeticError):
    """The moment targets cannot be reproduced by any admissible density."""


class InsufficientDataError(GigmixError, ValueError):
    pass


class DegenerateRangeError(GigmixError, ValueError):
    pass


class EmptyDatasetError(GigmixError, ValueError):
    pass


class InitializationError(GigmixError, RuntimeError):
    """No starting point with finite posterior density could be found."""


class ValidationError(GigmixError, ValueError):
    """A user-supplied document failed validation.

    ``path`` names the offending field, e.g. ``components[1].beta``.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
