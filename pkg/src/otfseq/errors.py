"""Package-wide error types.

ConfigError maps to CLI exit code 2, NumericalError to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid, unknown, or unreadable configuration input."""


class NumericalError(RuntimeError):
    """A numerical routine left its domain (indefiniteness, NaN, divergence)."""
