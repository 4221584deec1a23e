"""Tests for APCT tensor files."""

import struct
from pathlib import Path

import numpy as np
import pytest

from pianocover.errors import TensorFormatError
from pianocover.records import FrameGrid, MidiNote
from pianocover.roll import notes_to_tensors
from pianocover.tensor_io import (
    decode_tensor,
    encode_tensor,
    load_roll,
    load_tensor,
    save_roll,
    save_tensor,
)


class TestEncoding:
    """Tests for the byte layout."""

    def test_header_layout(self):
        """Magic, version, rank and little-endian dimensions precede the data."""
        data = encode_tensor(np.zeros((2, 3)))

        assert data[:4] == b"APCT"
        assert data[4] == 1
        assert data[5] == 2
        assert struct.unpack("<II", data[6:14]) == (2, 3)
        assert len(data) == 14 + 4 * 6

    def test_values_are_float32_le(self):
        """Values are row-major little-endian float32."""
        data = encode_tensor(np.array([[1.5, -2.0], [0.25, 8.0]]))
        values = struct.unpack("<4f", data[-16:])

        assert values == (1.5, -2.0, 0.25, 8.0)

    def test_decode(self):
        """Decoding restores shape and values."""
        array = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        np.testing.assert_array_equal(decode_tensor(encode_tensor(array)), array)

    def test_bad_magic(self):
        """Unknown magic bytes are rejected."""
        data = b"NOPE" + encode_tensor(np.zeros(3))[4:]
        with pytest.raises(TensorFormatError, match="magic"):
            decode_tensor(data)

    def test_bad_version(self):
        """Only version 1 is understood."""
        data = bytearray(encode_tensor(np.zeros(3)))
        data[4] = 2
        with pytest.raises(TensorFormatError, match="version"):
            decode_tensor(bytes(data))

    def test_truncated_body(self):
        """A body shorter than the declared shape is rejected."""
        with pytest.raises(TensorFormatError):
            decode_tensor(encode_tensor(np.zeros((4, 4)))[:-4])


class TestFiles:
    """Tests for file helpers."""

    def test_save_and_load(self, tmp_path: Path):
        """A saved tensor loads back and no temp files remain."""
        path = tmp_path / "sub" / "x.apct"
        save_tensor(path, np.ones((3, 2)))

        np.testing.assert_array_equal(load_tensor(path), np.ones((3, 2)))
        assert [p.name for p in path.parent.iterdir()] == ["x.apct"]

    def test_missing_file(self, tmp_path: Path):
        """Missing files raise TensorFormatError."""
        with pytest.raises(TensorFormatError):
            load_tensor(tmp_path / "missing.apct")

    def test_roll_directory(self, tmp_path: Path):
        """A ground-truth roll is restored with its one-hot velocities."""
        grid = FrameGrid()
        tensors = notes_to_tensors([MidiNote(1.0, 1.5, 60, 80)], 0, grid)
        save_roll(tmp_path / "roll", tensors)

        loaded = load_roll(tmp_path / "roll", truth=True)
        np.testing.assert_array_equal(loaded.velocity_classes, tensors.velocity_classes)
        np.testing.assert_allclose(loaded.onsets, tensors.onsets, atol=1e-7)
        loaded.validate(truth=True)

    def test_roll_wrong_shape(self, tmp_path: Path):
        """Rolls without 88 pitch columns are rejected."""
        save_tensor(tmp_path / "onsets.apct", np.zeros((4, 12)))
        save_tensor(tmp_path / "frames.apct", np.zeros((4, 12)))
        save_tensor(tmp_path / "velocities.apct", np.zeros((4, 12, 128)))

        with pytest.raises(TensorFormatError):
            load_roll(tmp_path)
