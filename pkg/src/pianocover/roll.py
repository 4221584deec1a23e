"""Piano-roll tensor encoding and decoding."""

import math
from collections import defaultdict
from typing import Optional

import numpy as np

from .records import (
    LOWEST_PITCH,
    N_PITCHES,
    FrameGrid,
    MidiNote,
    PianoRollTensors,
)


def note_span(note: MidiNote, grid: FrameGrid) -> tuple[int, int]:
    """Absolute [start, end) frame span of a note; at least one frame long."""
    start = grid.frame_index(note.onset_time)
    end = max(start + 1, grid.end_frame(note.offset_time))
    return start, end


def _split_restrikes(notes: list[MidiNote], grid: FrameGrid) -> list[tuple[int, int, int, int]]:
    """Frame spans (start, end, column, velocity), truncating each note at the next onset of its pitch."""
    by_pitch: dict[int, list[tuple[int, int, int]]] = defaultdict(list)
    for note in notes:
        start, end = note_span(note, grid)
        by_pitch[note.column].append((start, end, note.velocity))

    spans = []
    for column, items in by_pitch.items():
        items.sort()
        for i, (start, end, velocity) in enumerate(items):
            if i + 1 < len(items):
                next_start = items[i + 1][0]
                if next_start == start:
                    continue  # simultaneous duplicate; the later entry wins
                end = min(end, next_start)
            spans.append((start, end, column, velocity))
    return spans


def cover_frames(notes: list[MidiNote], grid: FrameGrid) -> int:
    """Number of frames from frame 0 to the end of the last note."""
    if not notes:
        return 0
    return max(note_span(n, grid)[1] for n in notes)


def segment_count(notes: list[MidiNote], grid: FrameGrid) -> int:
    """Number of consecutive segments needed to tile the cover."""
    return math.ceil(cover_frames(notes, grid) / grid.frames_per_segment)


def notes_to_tensors(
    notes: list[MidiNote],
    segment_start: int = 0,
    grid: FrameGrid = FrameGrid(),
    soft_onset_width: int = 3,
) -> PianoRollTensors:
    """
    Build ground-truth tensors for the segment beginning at `segment_start`.

    Onsets are encoded softly: a cell at distance d frames from the nearest
    onset of its pitch holds max(0, 1 - d / soft_onset_width).

    Args:
        notes: Notes of the whole performance
        segment_start: First frame index of the segment
        grid: Frame grid
        soft_onset_width: Width of the triangular onset target in frames

    Returns:
        PianoRollTensors with T = grid.frames_per_segment rows
    """
    if soft_onset_width < 1:
        raise ValueError("soft_onset_width must be at least 1")
    if segment_start < 0:
        raise ValueError("segment_start must be non-negative")

    n_frames = grid.frames_per_segment
    onsets = np.zeros((n_frames, N_PITCHES))
    frames = np.zeros((n_frames, N_PITCHES))
    classes = np.zeros((n_frames, N_PITCHES), dtype=np.int64)
    rows = np.arange(n_frames)

    for start, end, column, velocity in _split_restrikes(notes, grid):
        start -= segment_start
        end -= segment_start

        # Onsets just outside the window still shape the soft target inside it
        if -soft_onset_width < start < n_frames + soft_onset_width:
            soft = np.maximum(0.0, 1.0 - np.abs(rows - start) / soft_onset_width)
            onsets[:, column] = np.maximum(onsets[:, column], soft)

        lo, hi = max(start, 0), min(end, n_frames)
        if lo < hi:
            frames[lo:hi, column] = 1.0
            classes[lo:hi, column] = velocity

    return PianoRollTensors.from_classes(onsets, frames, classes)


def _onset_peaks(column: np.ndarray, threshold: float, before: float) -> np.ndarray:
    """Frames where the onset curve exceeds `threshold` at a local maximum (first of a plateau).

    `before` is the onset value of the frame preceding row 0.
    """
    padded = np.concatenate(([before], column, [-np.inf]))
    centre = padded[1:-1]
    rising = centre > padded[:-2]
    not_falling_after = centre >= padded[2:]
    return np.flatnonzero((centre > threshold) & rising & not_falling_after)


def tensors_to_notes(
    tensors: PianoRollTensors,
    onset_threshold: float = 0.5,
    grid: FrameGrid = FrameGrid(),
    segment_start: int = 0,
    previous_onsets: Optional[np.ndarray] = None,
) -> list[MidiNote]:
    """
    Decode notes from onset/frame/velocity tensors.

    A note starts at each local-maximum onset cell strictly above the threshold
    and lasts while the frame value stays strictly above it, ending early if
    another onset of the same pitch begins. A velocity argmax of class 0
    suppresses the note.

    Row 0 is compared against `previous_onsets`, the onset row of the frame
    before the segment. Without it, row 0 of the first segment is compared
    against silence and row 0 of a later segment cannot start a note, since
    its value may be the tail of an onset in the previous segment.

    Args:
        tensors: Predicted or ground-truth tensors
        onset_threshold: Decision threshold in (0, 1)
        grid: Frame grid
        segment_start: Absolute frame index of row 0
        previous_onsets: Optional (88,) onset row of frame segment_start - 1

    Returns:
        Notes sorted by onset time
    """
    if not 0.0 < onset_threshold < 1.0:
        raise ValueError("onset_threshold must lie in (0, 1)")

    if previous_onsets is not None:
        before = np.asarray(previous_onsets, dtype=np.float64)
        if before.shape != (N_PITCHES,):
            raise ValueError(f"previous_onsets must have shape ({N_PITCHES},), got {before.shape}")
    elif segment_start == 0:
        before = np.zeros(N_PITCHES)
    else:
        before = np.asarray(tensors.onsets[0], dtype=np.float64)

    n_frames = tensors.n_frames
    classes = tensors.velocity_classes
    active = tensors.frames > onset_threshold
    notes = []

    for column in range(N_PITCHES):
        peaks = _onset_peaks(tensors.onsets[:, column], onset_threshold, before[column])
        for i, start in enumerate(peaks):
            limit = peaks[i + 1] if i + 1 < len(peaks) else n_frames
            end = start + 1
            while end < limit and active[end, column]:
                end += 1

            velocity = int(classes[start, column])
            if velocity == 0:
                continue
            notes.append(
                MidiNote(
                    onset_time=grid.frame_time(segment_start + int(start)),
                    offset_time=grid.frame_time(segment_start + int(end)),
                    pitch=column + LOWEST_PITCH,
                    velocity=velocity,
                )
            )

    notes.sort(key=lambda n: (n.onset_time, n.pitch))
    return notes
