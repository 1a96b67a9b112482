"""Exception hierarchy shared by the numerical modules and the command line."""
from typing import Any, Dict, Optional


class ConformalEnergyError(Exception):
    """Base class; `exit_code` is what the command line returns for it."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_report(self) -> Dict[str, Any]:
        return {
            "success": False,
            "error": self.message,
            "error_type": type(self).__name__,
            "details": self.details,
        }


class ConfigurationError(ConformalEnergyError):
    exit_code = 2


class MapSyntaxError(ConfigurationError):
    """Mini-language parse failure; the message carries a caret line."""

    def __init__(self, message: str, expression: str, position: int):
        caret = f"{expression}\n{' ' * position}^"
        super().__init__(
            f"{message} at position {position}\n{caret}",
            {"expression": expression, "position": position},
        )
        self.expression = expression
        self.position = position


class MapValidationError(ConfigurationError):
    pass


class ParameterDomainError(ConfigurationError):
    pass


class DegenerateMapError(ConformalEnergyError):
    pass


class DegenerateQuadrupleError(ConformalEnergyError):
    pass


class NonIntegrableGaugeError(ConformalEnergyError):
    pass


class NonConvergentError(ConformalEnergyError):
    pass


class RegularityError(ConformalEnergyError):
    pass


class WindowError(ConformalEnergyError):
    pass


class CertificateError(ConformalEnergyError):
    pass

