"""Exception types raised by pdflow."""

import numpy as np


class UsageError(ValueError):
    """Bad arguments: wrong dimensions, times before t0, unknown names."""


class DimensionError(UsageError):
    pass


class ConfigError(UsageError):
    """Malformed or inconsistent experiment configuration."""


class NumericalError(ArithmeticError):
    """Non-finite values produced by an oracle or by the flow."""

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class SingularKKTError(np.linalg.LinAlgError):
    """The KKT matrix of a quadratic instance is singular."""

    def __init__(self, message, rank=None, size=None):
        super().__init__(message)
        self.rank = rank
        self.size = size


class DegenerateFitError(ValueError):
    """Not enough usable points to fit a convergence rate."""
