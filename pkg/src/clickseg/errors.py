"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a configuration violates an invariant or mismatches an input."""


class CacheMissError(RuntimeError):
    """Raised when mask prediction is attempted without a cached feature bundle."""


class DegenerateRoiError(ValueError):
    """Raised when a region of interest has no area."""
