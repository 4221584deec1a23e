"""Exception hierarchy for the piano cover toolkit."""

from typing import Optional


class PianoCoverError(Exception):
    """Base class for all errors raised by pianocover."""


class MidiParseError(PianoCoverError):
    """Raised when a Standard MIDI File cannot be decoded."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class TensorFormatError(PianoCoverError):
    """Raised when an APCT tensor file is malformed."""


class ShapeError(PianoCoverError):
    """Raised when array shapes are inconsistent.

    Args:
        dimension: Name of the offending dimension (e.g. 'Z', 'T', 'gate_w1')
    """

    def __init__(self, dimension: str, expected: Optional[object] = None, got: Optional[object] = None):
        self.dimension = dimension
        detail = f"shape mismatch in dimension {dimension}"
        if expected is not None or got is not None:
            detail += f" (expected {expected}, got {got})"
        super().__init__(detail)


class EmptyCoverError(PianoCoverError):
    """Raised when a style vector is requested for a cover without notes."""

    def __init__(self, message: str = "empty cover"):
        super().__init__(message)


class TrainingDivergedError(PianoCoverError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")


class AudioError(PianoCoverError):
    """Raised for unusable audio input."""


class ConfigError(PianoCoverError):
    """Raised when a JSON config file is missing or invalid."""
