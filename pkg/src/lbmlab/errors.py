"""Exception types used across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad key, bad value, inconsistent request)."""


class NumericalError(RuntimeError):
    """Numerical failure at run time (instability, failed fit, bad state)."""
