"""Exception types shared across the toolkit."""


class TdxvizError(Exception):
    """Base class for all toolkit-specific errors."""


class FormatError(TdxvizError):
    """A file or directory does not follow an expected on-disk format."""


class ShapeError(TdxvizError, ValueError):
    """Array dimensions do not match what an operation requires."""


class EmptyInputError(TdxvizError, ValueError):
    """An input collection that must be nonempty is empty."""


class ConfigError(TdxvizError, ValueError):
    """A model or run configuration is invalid."""


class UnsupportedArchitectureError(TdxvizError):
    """The model architecture cannot support the requested operation."""


class TrainingError(TdxvizError, RuntimeError):
    """Training diverged or otherwise failed.

    ``epoch`` holds the zero-based epoch index at which the failure occurred.
    """

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
