"""Exception types raised across the package."""


class GlobalBanditError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GlobalBanditError, ValueError):
    """A parameter value lies outside [0, 1]."""


class RangeError(GlobalBanditError, ValueError):
    """A reward value lies outside the range of a reward function."""


class InvalidFunctionError(GlobalBanditError, ValueError):
    """Reward-function parameters are degenerate or violate the model assumptions."""


class InvalidPairError(GlobalBanditError, ValueError):
    pass


class InvalidSpecError(GlobalBanditError, ValueError):
    """A drift or prior specification is infeasible."""


class SequencingError(GlobalBanditError, RuntimeError):
    """``update`` was called without a matching ``select``."""


class AggregationError(GlobalBanditError, ValueError):
    pass


class OutOfScopeError(GlobalBanditError, ValueError):
    """A bound was evaluated outside the horizon range it is stated for."""


class ConfigError(GlobalBanditError, ValueError):
    """Invalid experiment configuration; ``where`` locates the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
