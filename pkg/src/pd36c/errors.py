"""Exception types shared across the package."""


class PD36Error(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(PD36Error):
    """Tensor or parameter shapes do not satisfy an operator's contract."""


class ConfigError(PD36Error):
    """A hyperparameter, option, or label set is invalid."""


class DegenerateBatchError(PD36Error):
    """Batch statistics were requested over zero elements."""


class StateError(PD36Error):
    """An operation was called before the state it depends on exists."""


class DataError(PD36Error):
    """Input values or an on-disk artifact are malformed."""


class WeightFormatError(DataError):
    """A weight container failed magic, version, length, or checksum checks."""
