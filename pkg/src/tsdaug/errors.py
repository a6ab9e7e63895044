"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems -> 1, DataError -> 2,
NumericalError -> 3.
"""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class DataError(ValueError):
    """Malformed input data (parse failures, shape violations)."""


class NumericalError(RuntimeError):
    """Non-finite values where finite ones are required (losses, gradients)."""
