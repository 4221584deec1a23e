"""APCT tensor files.

Layout: magic b"APCT", u8 version (1), u8 rank, one u32 size per dimension,
then the values as row-major little-endian float32. Integers are little-endian.
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import TensorFormatError
from .records import N_PITCHES, N_VELOCITY_CLASSES, PianoRollTensors

MAGIC = b"APCT"
VERSION = 1
_HEADER = struct.Struct("<4sBB")


def encode_tensor(array: np.ndarray) -> bytes:
    """Serialize an array to APCT bytes."""
    array = np.asarray(array)
    if array.ndim > 255:
        raise TensorFormatError(f"rank {array.ndim} exceeds 255")
    header = _HEADER.pack(MAGIC, VERSION, array.ndim)
    dims = struct.pack(f"<{array.ndim}I", *array.shape)
    body = np.ascontiguousarray(array, dtype="<f4").tobytes()
    return header + dims + body


def decode_tensor(data: bytes) -> np.ndarray:
    """Decode APCT bytes into a float32 array."""
    if len(data) < _HEADER.size:
        raise TensorFormatError("truncated APCT header")
    magic, version, rank = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TensorFormatError(f"unsupported APCT version {version}")

    offset = _HEADER.size
    if len(data) < offset + 4 * rank:
        raise TensorFormatError("truncated APCT dimensions")
    shape = struct.unpack_from(f"<{rank}I", data, offset)
    offset += 4 * rank

    count = int(np.prod(shape, dtype=np.int64))
    expected = offset + 4 * count
    if len(data) != expected:
        raise TensorFormatError(f"APCT body has {len(data) - offset} bytes, expected {4 * count}")
    return np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape).copy()


def save_tensor(path: str | Path, array: np.ndarray) -> None:
    """Write an APCT file atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, suffix=".apct")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(encode_tensor(array))
        os.replace(temp_path, path)
    except Exception:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def load_tensor(path: str | Path) -> np.ndarray:
    """Read an APCT file."""
    path = Path(path)
    if not path.exists():
        raise TensorFormatError(f"tensor file not found: {path}")
    return decode_tensor(path.read_bytes())


def save_roll(directory: str | Path, tensors: PianoRollTensors) -> None:
    """Write piano-roll tensors as onsets/frames/velocities APCT files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_tensor(directory / "onsets.apct", tensors.onsets)
    save_tensor(directory / "frames.apct", tensors.frames)
    save_tensor(directory / "velocities.apct", tensors.velocities)


def load_roll(directory: str | Path, *, truth: bool = False) -> PianoRollTensors:
    """
    Read piano-roll tensors written by save_roll.

    Args:
        directory: Directory holding the three APCT files
        truth: Restore ground-truth dtypes (binary frames, uint8 one-hot velocities)
    """
    directory = Path(directory)
    onsets = load_tensor(directory / "onsets.apct").astype(np.float64)
    frames = load_tensor(directory / "frames.apct").astype(np.float64)
    velocities = load_tensor(directory / "velocities.apct")

    if onsets.ndim != 2 or onsets.shape[1] != N_PITCHES:
        raise TensorFormatError(f"onsets must be (T, 88), got {onsets.shape}")
    if velocities.shape != onsets.shape + (N_VELOCITY_CLASSES,):
        raise TensorFormatError(f"velocities must be (T, 88, 128), got {velocities.shape}")

    if truth:
        return PianoRollTensors.from_classes(onsets, frames, np.argmax(velocities, axis=-1))
    return PianoRollTensors(onsets=onsets, frames=frames, velocities=velocities.astype(np.float64))
