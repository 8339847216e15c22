"""Exception hierarchy shared by all modules."""


class SdrSvmError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(SdrSvmError, ValueError):
    """A hyperparameter or loss setting is outside its admissible range."""


class DomainError(SdrSvmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(SdrSvmError, ValueError):
    """Array dimensions are inconsistent."""


class LpIterationLimit(SdrSvmError):
    """The simplex method hit its iteration cap.

    Attributes
    ----------
    best_x : ndarray or None
        Last primal point known to be feasible, or ``None`` if phase 1
        never finished.
    iterations : int
    """

    def __init__(self, message, best_x=None, iterations=0):
        super().__init__(message)
        self.best_x = best_x
        self.iterations = iterations


class TrainingError(SdrSvmError):
    """DC training could not continue (e.g. an unbounded LP subproblem)."""

    def __init__(self, message, iteration=None, report=None):
        super().__init__(message)
        self.iteration = iteration
        self.report = report


class ModelFormatError(SdrSvmError):
    """Base class for model (de)serialization failures."""


class CorruptModelError(ModelFormatError):
    """The payload is truncated, not parseable, or missing fields."""


class VersionMismatchError(ModelFormatError):
    """The payload declares a format version this build cannot read."""


class DataError(SdrSvmError):
    """Input data could not be parsed or is unusable."""
