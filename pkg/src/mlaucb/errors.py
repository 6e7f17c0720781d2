"""Exception hierarchy shared across the package."""


class MlaUcbError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MlaUcbError, ValueError):
    """Invalid experiment or model configuration.

    ``field`` names the offending configuration key when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(MlaUcbError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InsufficientDataError(MlaUcbError, ValueError):
    """Too few observations for the requested statistic."""


class DegenerateRegressorError(MlaUcbError, ArithmeticError):
    """The online surrogate rewards have zero sample variance."""


class ProtocolError(MlaUcbError, RuntimeError):
    """An object was used out of its documented order."""
