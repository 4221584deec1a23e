"""Shared test fixtures for pianocover tests."""

import struct

import numpy as np
import pytest

from pianocover.config import ToyNetHyperParams
from pianocover.records import FrameGrid, MidiNote, SyntheticPair
from pianocover.roll import notes_to_tensors
from pianocover.style import extract_style_vector
from pianocover.synthetic import render_features


def _varlen(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def build_smf(events: list[tuple[int, bytes]], division: int = 480, midi_format: int = 0) -> bytes:
    """Assemble a one-track SMF from (delta ticks, raw event bytes) pairs."""
    body = b"".join(_varlen(delta) + data for delta, data in events)
    body += b"\x00\xff\x2f\x00"
    header = b"MThd" + struct.pack(">IHHH", 6, midi_format, 1, division)
    return header + b"MTrk" + struct.pack(">I", len(body)) + body


@pytest.fixture
def grid() -> FrameGrid:
    """Default 16 ms / 512-frame grid."""
    return FrameGrid()


@pytest.fixture
def one_note() -> MidiNote:
    """Middle C from 1.0 s to 1.5 s at velocity 80."""
    return MidiNote(1.0, 1.5, 60, 80)


@pytest.fixture
def one_note_smf() -> bytes:
    """SMF with middle C from 1.0 s to 1.5 s (120 BPM, 480 ticks per beat = 960 ticks/s)."""
    return build_smf([(960, b"\x90\x3c\x50"), (480, b"\x80\x3c\x00")])


@pytest.fixture
def small_cover() -> list[MidiNote]:
    """A short polyphonic cover with varied pitch and velocity."""
    return [
        MidiNote(0.0, 0.5, 60, 70),
        MidiNote(0.0, 0.5, 64, 80),
        MidiNote(0.5, 1.0, 67, 90),
        MidiNote(1.0, 1.6, 72, 100),
        MidiNote(1.2, 1.8, 48, 60),
    ]


@pytest.fixture
def tiny_hyper() -> ToyNetHyperParams:
    """Network shape used for gradient checks."""
    return ToyNetHyperParams(T=8, F=2, Z=4, G=3, F_in=16)


@pytest.fixture
def tiny_pair() -> SyntheticPair:
    """An 8-frame training example with two notes."""
    grid = FrameGrid(frames_per_segment=8)
    notes = [
        MidiNote(grid.frame_time(1), grid.frame_time(4), 60, 80),
        MidiNote(grid.frame_time(3), grid.frame_time(7), 67, 100),
    ]
    return SyntheticPair(
        input_features=render_features(notes, 8, 16, grid),
        target=notes_to_tensors(notes, 0, grid),
        style=extract_style_vector(notes, grid),
        cover_notes=notes,
        original_notes=notes,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for random test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def smf_builder():
    """The build_smf helper, for tests that assemble their own files."""
    return build_smf
