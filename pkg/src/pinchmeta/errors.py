"""Exception types shared across the package."""


class PinchMetaError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(PinchMetaError, ValueError):
    """A configuration or physical parameter is outside its domain."""


class DomainError(PinchMetaError, ValueError):
    """An operation was called with an argument outside its valid domain."""


class SingularityError(PinchMetaError, ArithmeticError):
    """Receiver and antenna coincide, so the free-space gain is undefined."""


class NumericalError(PinchMetaError, ArithmeticError):
    """A non-finite value appeared in a loss or gradient."""


class DivergenceError(NumericalError):
    """Meta-training loss exceeded the divergence guard.

    The partial training trace is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(PinchMetaError):
    """Bad configuration key or value. ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
