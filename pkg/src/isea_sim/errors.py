"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid configuration values or malformed config files."""


class NumericalError(RuntimeError):
    """Raised when a linear-algebra step leaves the trusted regime.

    Examples: an effective covariance whose condition number exceeds 1e12,
    or a singular channel Gram matrix.
    """


class InfeasibleAccessError(RuntimeError):
    """Raised when orthogonal access is requested with fewer antennas than sensors."""
