"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A config file or parameter combination is invalid or unsupported."""


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class CapabilityError(ValueError):
    """A request exceeds a documented method or size cap."""


class CalibrationError(RuntimeError):
    """Parameter calibration failed (e.g. the target is not bracketed)."""
