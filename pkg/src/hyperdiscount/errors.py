"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A numeric argument is non-finite or outside its allowed range."""


class ConfigurationError(ValueError):
    """Shapes or settings do not fit together (e.g. feature width mismatch)."""


class ProtocolError(RuntimeError):
    """An object was used out of order, e.g. stepping a finished episode."""


class NotReadyError(RuntimeError):
    """A quantity was requested before enough data had been absorbed."""


class DynamicsError(ArithmeticError):
    """Integration produced a non-finite state."""
