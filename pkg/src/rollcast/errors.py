"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, DivergenceError -> 4.
"""


class ConfigError(ValueError):
    """Invalid configuration value, flag, or config-file content."""


class DataError(ValueError):
    """Missing, malformed, or inconsistent input data."""


class ShapeError(ValueError):
    """Array shapes do not conform to an operation's contract."""


class StateError(RuntimeError):
    """Operation called out of order, e.g. backward before forward."""


class CheckpointError(DataError):
    """Checkpoint manifest, blob, or spec failed validation."""


class DegenerateChannelError(DataError):
    """A channel is constant, so min-max normalization is undefined."""


class DivergenceError(ArithmeticError):
    """A numeric computation produced non-finite values."""
