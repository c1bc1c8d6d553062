from config import EXIT_DATA_ERROR, EXIT_NUMERIC_ERROR, EXIT_USAGE_ERROR


class FibrosisError(Exception):
    """Base class for every error the pipeline reports to the caller"""
    exit_code = EXIT_DATA_ERROR

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


# Usage errors

class ConfigError(FibrosisError, ValueError):
    exit_code = EXIT_USAGE_ERROR


# Data / format errors

class ShapeError(FibrosisError, ValueError):
    pass


class RoiBoundsError(FibrosisError):
    pass


class NoRoiFoundError(FibrosisError):
    pass


class ImageTooSmallError(FibrosisError):
    pass


class EmptyRoiError(FibrosisError):
    pass


class UndefinedScoreError(FibrosisError):
    pass


class CheckpointFormatError(FibrosisError):
    pass


class CheckpointCorruptError(FibrosisError):
    pass


class PhantomPackingError(FibrosisError):
    pass


class ManifestError(FibrosisError):
    pass


class ImageReadError(FibrosisError):
    pass


class FileAccessError(FibrosisError):
    """A file or directory could not be read or written"""


class PerplexityError(FibrosisError, ValueError):
    pass


# Numeric / training errors

class NumericError(FibrosisError, ArithmeticError):
    exit_code = EXIT_NUMERIC_ERROR


class GraphConsumedError(FibrosisError, RuntimeError):
    exit_code = EXIT_NUMERIC_ERROR


class DegenerateInputError(FibrosisError):
    exit_code = EXIT_NUMERIC_ERROR


class TrainingDivergedError(FibrosisError):
    exit_code = EXIT_NUMERIC_ERROR

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"Training diverged at epoch {epoch}: non-finite loss")

    def to_dict(self):
        payload = super().to_dict()
        payload["epoch"] = self.epoch
        return payload
