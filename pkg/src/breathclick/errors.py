"""Exception types shared across the package."""


class BreathClickError(Exception):
    """Base class for all package-specific errors."""


class ZeroCurrentError(BreathClickError):
    """Impedance ratio measurement received a zero test current."""


class NullGestureError(BreathClickError):
    """A gesture synthesis routine was asked to render the null class."""


class NonPositiveMagnitudeError(BreathClickError):
    """A scale transform requires strictly positive magnitudes."""


class SeriesTooShortError(BreathClickError):
    """The signal is shorter than one analysis window."""


class EmptyLabelsError(BreathClickError):
    """Class weights cannot be derived from an empty label set."""


class UnknownKeyError(BreathClickError):
    """The requested hold-out subject or scenario is not in the data."""


class EmptyDatasetError(BreathClickError):
    """Training requires at least one window."""


class ShapeMismatchError(BreathClickError):
    """Tensor shapes are inconsistent with the model configuration."""


class ConfigMismatchError(BreathClickError):
    """Stored weights belong to a different model configuration."""


class FormatVersionMismatchError(BreathClickError):
    """A persisted file carries an unsupported format version."""


class LengthMismatchError(BreathClickError):
    """Paired sequences must have equal length."""


class EmptyMatrixError(BreathClickError):
    """Metrics require a confusion matrix with at least one count."""


class InsufficientFoldsError(BreathClickError):
    """Cross-validation needs at least two hold-out keys."""
