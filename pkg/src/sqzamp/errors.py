"""Exception hierarchy."""


class ModelError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(ModelError, ValueError):
    """A numeric argument lies outside the domain of the model."""


class MisuseError(ModelError, ValueError):
    """An operation was called on a setup it does not apply to."""


class NumericalError(ModelError, ArithmeticError):
    """A linear solve was too badly conditioned to trust."""


class ConfigError(ModelError, ValueError):
    """Invalid user configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
