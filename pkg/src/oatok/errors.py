"""Exception types shared across the toolkit."""


class OatokError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(OatokError, ValueError):
    """Invalid configuration value or combination."""


class DegenerateDimensionError(OatokError, ValueError):
    """A dimension has min == max and cannot be normalized."""


class InsufficientLengthError(OatokError, ValueError):
    """A trajectory is shorter than the requested chunk horizon."""


class ShapeError(OatokError, ValueError):
    """Input array has the wrong shape or length."""


class InvalidInputError(OatokError, ValueError):
    """Input contains non-finite or otherwise unusable entries."""


class BoundsError(OatokError, ValueError):
    """A scalar argument is outside its allowed range."""


class OutOfAlphabetError(OatokError, ValueError):
    """A symbol is not part of the trained base alphabet."""


class OutOfVocabularyError(OatokError, ValueError):
    """A token id does not exist in the vocabulary."""


class NotApplicableError(OatokError, ValueError):
    """The requested demonstration does not apply to the given input."""


class FeatureDisabledError(OatokError, RuntimeError):
    """An optional feature was invoked while its flag is off."""


class TrainingDivergedError(OatokError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class BindingError(OatokError, ValueError):
    """Policy and tokenizer vocabularies do not match."""


class StateError(OatokError, RuntimeError):
    """Operation requires a fitted/trained object."""
