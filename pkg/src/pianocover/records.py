"""Domain dataclasses shared across the piano cover toolkit."""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

N_PITCHES = 88
N_VELOCITY_CLASSES = 128
LOWEST_PITCH = 21
HIGHEST_PITCH = 108
STYLE_BLOCK = 8
STYLE_DIM = 3 * STYLE_BLOCK
N_CHROMA = 12


@dataclass(frozen=True)
class MidiNote:
    """A single piano note.

    Times are in seconds, pitch is a MIDI note number and velocity is 1-127.
    """

    onset_time: float
    offset_time: float
    pitch: int
    velocity: int

    def __post_init__(self):
        if self.onset_time < 0:
            raise ValueError(f"onset_time must be non-negative, got {self.onset_time}")
        if not self.offset_time > self.onset_time:
            raise ValueError(
                f"offset_time ({self.offset_time}) must be greater than onset_time ({self.onset_time})"
            )
        if not LOWEST_PITCH <= self.pitch <= HIGHEST_PITCH:
            raise ValueError(f"pitch {self.pitch} outside piano range [21, 108]")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside [1, 127]")

    @property
    def column(self) -> int:
        """Piano-roll column index (pitch - 21)."""
        return self.pitch - LOWEST_PITCH

    @property
    def duration(self) -> float:
        return self.offset_time - self.onset_time


@dataclass(frozen=True)
class FrameGrid:
    """Time grid of the piano roll."""

    hop_seconds: float = 0.016
    frames_per_segment: int = 512

    def frame_index(self, seconds: float) -> int:
        """Frame containing the instant `seconds` (floor rule)."""
        # Tolerance keeps exact multiples of the hop on their own frame
        return int(math.floor(seconds / self.hop_seconds + 1e-9))

    def end_frame(self, seconds: float) -> int:
        """Exclusive end frame of a note released at `seconds` (ceil rule)."""
        return int(math.ceil(seconds / self.hop_seconds - 1e-9))

    def frame_time(self, frame: int) -> float:
        return frame * self.hop_seconds

    @property
    def segment_seconds(self) -> float:
        return self.frames_per_segment * self.hop_seconds


@dataclass
class PianoRollTensors:
    """Onset, frame and velocity matrices for one segment.

    Ground truth keeps velocities as a uint8 one-hot array; predictions keep a
    float probability distribution over the 128 classes per cell.
    """

    onsets: np.ndarray  # (T, 88)
    frames: np.ndarray  # (T, 88)
    velocities: np.ndarray  # (T, 88, 128)

    @classmethod
    def from_classes(
        cls, onsets: np.ndarray, frames: np.ndarray, classes: np.ndarray
    ) -> "PianoRollTensors":
        """Build ground-truth tensors from per-cell velocity class indices."""
        classes = np.asarray(classes, dtype=np.int64)
        one_hot = np.zeros(classes.shape + (N_VELOCITY_CLASSES,), dtype=np.uint8)
        np.put_along_axis(one_hot, classes[..., None], 1, axis=-1)
        return cls(onsets=onsets, frames=frames, velocities=one_hot)

    @classmethod
    def zeros(cls, n_frames: int) -> "PianoRollTensors":
        return cls.from_classes(
            np.zeros((n_frames, N_PITCHES)),
            np.zeros((n_frames, N_PITCHES)),
            np.zeros((n_frames, N_PITCHES), dtype=np.int64),
        )

    @property
    def n_frames(self) -> int:
        return self.onsets.shape[0]

    @property
    def velocity_classes(self) -> np.ndarray:
        """Argmax velocity class per cell, shape (T, 88)."""
        return np.argmax(self.velocities, axis=-1)

    def validate(self, *, truth: bool) -> None:
        """Check the representation invariants; raises ValueError."""
        t = self.n_frames
        if self.onsets.shape != (t, N_PITCHES) or self.frames.shape != (t, N_PITCHES):
            raise ValueError("onset/frame matrices must be (T, 88)")
        if self.velocities.shape != (t, N_PITCHES, N_VELOCITY_CLASSES):
            raise ValueError("velocity array must be (T, 88, 128)")
        if np.any(self.onsets < 0) or np.any(self.onsets > 1):
            raise ValueError("onset values must lie in [0, 1]")
        if truth:
            if not np.all(np.isin(self.frames, (0, 1))):
                raise ValueError("ground-truth frames must be binary")
            if not np.all(self.velocities.sum(axis=-1) == 1):
                raise ValueError("ground-truth velocity rows must be one-hot")
        elif not np.allclose(self.velocities.sum(axis=-1), 1.0, atol=1e-6):
            raise ValueError("predicted velocity rows must sum to 1")


@dataclass
class StyleSamples:
    """Raw samples the style vector is built from."""

    onset_rates: list[float]
    velocities: list[int]
    pitches: list[int]


@dataclass
class StyleVector:
    """24-dimensional style vector: onset-rate, velocity and pitch histograms."""

    values: np.ndarray  # (24,)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (STYLE_DIM,):
            raise ValueError(f"style vector must have {STYLE_DIM} values, got {self.values.shape}")

    @property
    def onset_rate(self) -> np.ndarray:
        return self.values[0:STYLE_BLOCK]

    @property
    def velocity(self) -> np.ndarray:
        return self.values[STYLE_BLOCK : 2 * STYLE_BLOCK]

    @property
    def pitch(self) -> np.ndarray:
        return self.values[2 * STYLE_BLOCK : 3 * STYLE_BLOCK]

    def to_dict(self) -> dict:
        return {
            "onset_rate": self.onset_rate.tolist(),
            "velocity": self.velocity.tolist(),
            "pitch": self.pitch.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StyleVector":
        try:
            blocks = [data["onset_rate"], data["velocity"], data["pitch"]]
        except KeyError as e:
            raise ValueError(f"style vector JSON missing key {e}") from e
        if any(len(b) != STYLE_BLOCK for b in blocks):
            raise ValueError("each style block must have 8 values")
        return cls(np.concatenate([np.asarray(b, dtype=np.float64) for b in blocks]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StyleVector":
        return cls.from_dict(json.loads(text))


@dataclass
class ChromaSequence:
    """Per-frame 12-dimensional pitch-class energies (C = class 0)."""

    frames: np.ndarray  # (N, 12)
    frame_hop: float

    def __len__(self) -> int:
        return self.frames.shape[0]

    def transposed(self, semitones: int) -> "ChromaSequence":
        """Rotate pitch classes upward by `semitones`."""
        return ChromaSequence(np.roll(self.frames, semitones, axis=1), self.frame_hop)


@dataclass
class QmaxResult:
    """Cover similarity from the cross-recurrence alignment."""

    qmax: float
    distance: float
    oti: int
    n_a: int
    n_b: int

    @property
    def infinite(self) -> bool:
        return math.isinf(self.distance)

    def to_dict(self) -> dict:
        return {
            "qmax": self.qmax,
            "distance": None if self.infinite else self.distance,
            "infinite": self.infinite,
            "oti": self.oti,
            "n_a": self.n_a,
            "n_b": self.n_b,
        }


@dataclass
class F1Scores:
    """Cell-level F1 scores on the three matrices."""

    onset_f1: float
    frame_f1: float
    velocity_f1: float

    @property
    def average(self) -> float:
        return (self.onset_f1 + self.frame_f1 + self.velocity_f1) / 3.0

    def to_dict(self) -> dict:
        return {
            "onset_f1": self.onset_f1,
            "frame_f1": self.frame_f1,
            "velocity_f1": self.velocity_f1,
            "average": self.average,
        }


@dataclass
class AlignmentResult:
    """DTW warping path and accumulated cost."""

    path: list[tuple[int, int]]
    cost: float


@dataclass
class ParsedMidi:
    """Notes decoded from a Standard MIDI File plus parse statistics."""

    notes: list[MidiNote]
    dropped_out_of_range: int = 0
    midi_format: int = 0
    ticks_per_beat: int = 480
    n_tracks: int = 0
    unmatched_note_offs: int = 0
    metadata: dict = field(default_factory=dict)


@dataclass
class SyntheticPair:
    """One synthetic (original features, cover target, style) training example."""

    input_features: np.ndarray  # (T, F_in)
    target: PianoRollTensors
    style: StyleVector
    cover_notes: list[MidiNote] = field(default_factory=list)
    original_notes: list[MidiNote] = field(default_factory=list)
    intensity: Optional[float] = None
