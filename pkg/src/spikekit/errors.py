"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs that break its contract."""


class ConfigError(ValueError):
    """A run configuration is malformed (unknown key, bad type or value)."""
