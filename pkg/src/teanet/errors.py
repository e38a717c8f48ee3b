"""Exception types shared across the package."""


class TeanetError(Exception):
    """Base class for all package errors."""


class ShapeError(TeanetError, ValueError):
    """Raised when a tensor does not have the dimensions an operation needs."""

    def __init__(self, message, expected=None, actual=None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, got {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class ConfigError(TeanetError, ValueError):
    """Invalid hyperparameter or configuration value."""


class UsageError(TeanetError, RuntimeError):
    """API called in the wrong order, e.g. backward before forward."""


class DataError(TeanetError, ValueError):
    """Malformed or inconsistent input data."""


class NumericError(TeanetError, FloatingPointError):
    """Non-finite values appeared during training."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer
