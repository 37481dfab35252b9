"""Exceptions raised by driftopt."""


class DriftoptError(Exception):
    """Base exception for driftopt errors."""
    pass


class ConfigurationError(DriftoptError, ValueError):
    """Raised when models, policies or configs do not fit together."""
    pass


class DataError(DriftoptError, ValueError):
    """Raised for malformed logged data (e.g. non-positive propensities)."""
    pass


class InputError(DriftoptError, ValueError):
    """Raised when an algorithm receives inputs it cannot work with."""
    pass
