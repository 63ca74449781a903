"""Exception hierarchy shared by every module of the package."""


class ButterflyError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(ButterflyError, ValueError):
    """A transform size or block size is not a supported power of two."""


class InvalidStageError(ButterflyError, ValueError):
    """A butterfly stage index is out of range for the transform size."""


class ShapeError(ButterflyError, ValueError):
    """Array shapes or lengths do not match an operation's contract."""


class NumericError(ButterflyError, ArithmeticError):
    """Input or intermediate values are NaN or infinite."""


class TapeError(ButterflyError, RuntimeError):
    """The gradient tape was used out of order."""


class TooShortError(ShapeError):
    """A signal is shorter than one analysis frame."""


class DegenerateSignalError(ButterflyError, ValueError):
    """A signal has zero power where a nonzero power is required."""


class UndefinedMetricError(ButterflyError, ValueError):
    """A metric cannot be computed, e.g. no voiced frames."""


class FormatError(ButterflyError, ValueError):
    """A checkpoint file is malformed.

    ``offset`` is the byte position where parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(ButterflyError, ValueError):
    """A WAV file uses a layout this package does not read."""


class ConfigError(ButterflyError, ValueError):
    """A run configuration is invalid.

    ``line`` is the 1-based line number of the offending entry, if known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingDivergedError(ButterflyError, ArithmeticError):
    """The training loss became non-finite."""

    def __init__(self, step):
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step
