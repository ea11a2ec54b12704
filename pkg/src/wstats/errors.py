"""Exception hierarchy for wstats."""


class WStatsError(Exception):
    """Base class for all errors raised by this package."""


class UnknownFamilyError(WStatsError, ValueError):
    pass


class DensityError(WStatsError, ValueError):
    """A density cannot be normalised, standardised or integrated."""


class QuantileError(WStatsError, ValueError):
    pass


class EmptySampleError(WStatsError, ValueError):
    pass


class SampleSizeMismatchError(WStatsError, ValueError):
    pass


class DegenerateSampleError(WStatsError, ValueError):
    """The likelihood is unbounded (e.g. all observations equal)."""


class ConvergenceError(WStatsError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``best`` carries the best point found so far and ``cost`` its value.
    """

    def __init__(self, message, best=None, cost=None, iterations=0):
        super().__init__(message)
        self.best = best
        self.cost = cost
        self.iterations = iterations


class SingularDensityError(WStatsError, ValueError):
    """The density vanishes inside its support, so 1/p is not integrable."""


class ConfigError(WStatsError, ValueError):
    pass


class SimulationError(WStatsError, RuntimeError):
    """Too many estimator failures; ``report`` holds the partial result."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
