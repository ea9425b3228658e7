"""Exception types shared across the package."""


class EmberlineError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EmberlineError, ValueError):
    """An input is outside the physical domain a routine is valid for."""


class InfeasibleLoadError(EmberlineError):
    """The requested constant-power load admits no steady-state solution."""


class CalibrationError(EmberlineError, ValueError):
    """A calibration table is inconsistent or a query falls outside it."""


class ConfigError(EmberlineError, ValueError):
    """A configuration file or mapping failed schema validation."""
