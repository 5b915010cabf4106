class ConfigError(ValueError):
    """Raised when an experiment configuration is invalid or cannot be read."""


class SingularInformationError(ArithmeticError):
    """Raised when a Fisher-type matrix or covariance is too ill-conditioned to invert."""


class CalibrationError(RuntimeError):
    """Raised when dynamic-range calibration yields a degenerate quantizer range."""
