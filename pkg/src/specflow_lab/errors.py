"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so estimator code should
raise the most specific class that applies.
"""


class SpecflowError(Exception):
    """Base class for all package errors."""


class ValidationError(SpecflowError):
    """Bad inputs: malformed descriptors, violated preconditions, invalid sets."""


class GeneratorExhausted(ValidationError):
    """A finite partial-quotient list was asked for more terms than it has."""


class PrecisionError(SpecflowError):
    """A certified computation could not separate a value from a decision boundary.

    Carries optional context (e.g. the offending step index) in ``where``.
    """

    def __init__(self, msg, where=None):
        super().__init__(msg if where is None else f"{msg} (at {where})")
        self.where = where


class BoundaryAmbiguityError(PrecisionError):
    """A flow step landed within its rounding bound of a roof boundary."""


class CheckFailure(SpecflowError):
    """An asserted inequality or certificate failed."""
