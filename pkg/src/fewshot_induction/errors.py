"""Exception types shared across the package.

The split mirrors how failures surface to callers: shape problems are
programming errors caught loudly, data problems carry file/line context,
config problems point at a bad setting, and numeric failures abort a run.
"""


class DimensionError(ValueError):
    """Tensor shapes do not satisfy an operation's contract."""


class ContractError(ValueError):
    """A precondition other than a shape requirement was violated."""


class ConfigError(ValueError):
    """A configuration value is invalid."""


class DataError(ValueError):
    """An input file or corpus is malformed; message carries the location."""


class NumericError(RuntimeError):
    """A non-finite value appeared where the pipeline requires finite math."""
