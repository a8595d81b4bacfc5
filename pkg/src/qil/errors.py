"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid static configuration: register size, env id, config values."""


class UsageError(RuntimeError):
    """An object was used out of order, e.g. stepping a finished episode."""
