"""Exception hierarchy.

Every error the CLI maps to a non-zero exit code derives from one of the
three bases below, so callers can catch broadly or narrowly.
"""


class MDPError(Exception):
    """Base class for all package errors."""


class ModelParseError(MDPError):
    """A model file could not be parsed. ``field`` names the offending key."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class ValidationError(MDPError):
    """Inputs are well-formed but violate a model invariant."""


class DimensionMismatch(ValidationError):
    pass


class AsymmetricGrid(ValidationError):
    pass


class RowNotStochastic(ValidationError):
    pass


class HorizonTooShort(ValidationError):
    pass


class UndefinedAction(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NonIntegerGrid(ValidationError):
    pass


class BadDiscount(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ParameterOutOfRegime(ValidationError):
    pass


class AssumptionM0Violated(ValidationError):
    pass


class AssumptionM3Violated(ValidationError):
    pass


class PreconditionFailed(ValidationError):
    pass


class NotEven(MDPError):
    """The model is not even, so it cannot be folded.

    ``report`` carries the structure report whose A1/A2 witnesses explain why.
    """

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class MaxIterExceeded(RuntimeWarning):
    """Value iteration hit ``max_iter`` before meeting the stopping rule."""
