"""Exception hierarchy.

The CLI maps :class:`ValidationError` subclasses to exit code 2 and any
other :class:`CTMCError` to exit code 3.
"""


class CTMCError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CTMCError, ValueError):
    """Bad model, configuration or expression."""


class ModelValidationError(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class RateExprSyntaxError(ValidationError):
    def __init__(self, message, position, source):
        self.position = position
        self.source = source
        super().__init__(f"syntax error at position {position}: {message} in {source!r}")


class UnknownIdentifierError(ValidationError):
    def __init__(self, message, name, position, source):
        self.name = name
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position} in {source!r}")


class RateEvaluationError(CTMCError, ArithmeticError):
    def __init__(self, channel, state, value):
        self.channel = channel
        self.state = tuple(int(x) for x in state)
        self.value = value
        super().__init__(f"rate evaluation error: channel {channel} gave {value!r} at state {self.state}")


class ImpossibleTransitionError(CTMCError):
    pass


class EventCapExceeded(CTMCError):
    pass


class ExtinctionNotReached(CTMCError):
    pass


class DegenerateOutputError(CTMCError, ArithmeticError):
    """Zero output variance: Sobol indices are undefined."""


class FlaggedEstimateWarning(UserWarning):
    """An index estimate fell outside [-0.05, 1.05] (kept, not clipped)."""
