"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for non-finite, empty, or out-of-range user inputs."""


class ShapeError(ValueError):
    """Raised when an array has the wrong dimensionality or length."""


class ArityError(ValueError):
    """Raised when a binary-only operation is called on a non-binary model."""


class InvalidModelError(ValueError):
    """Raised when model parameters are non-finite or inconsistent."""


class UnsupportedDegreeError(ValueError):
    """Raised when an operation requires a higher spline degree."""


class StratificationError(ValueError):
    """Raised when a class is too rare to stratify a split or fold."""


class UndefinedMetricError(ValueError):
    """Raised when a metric is undefined for the given labels (e.g. single-class AUC)."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss.

    Carries the last finite parameter snapshot and the loss history so the
    caller can inspect or recover the run.
    """

    def __init__(self, message, last_state=None, history=None):
        super().__init__(message)
        self.last_state = last_state
        self.history = history


class BundleFormatError(ValueError):
    """Raised when a model bundle file is corrupt or structurally invalid."""


class BundleVersionError(BundleFormatError):
    """Raised when a model bundle was written by an incompatible format version."""
