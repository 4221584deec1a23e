"""Inference-time cleanup between model output and emitted MIDI."""

import logging
from typing import Optional

import numpy as np

from .config import PostprocConfig
from .records import FrameGrid, MidiNote, PianoRollTensors
from .roll import tensors_to_notes

logger = logging.getLogger(__name__)

# Frame-grid durations carry float error (5 * 0.016 != 0.08 exactly)
_DURATION_TOLERANCE = 1e-9


def clean_notes(notes: list[MidiNote], config: Optional[PostprocConfig] = None) -> list[MidiNote]:
    """
    Drop notes shorter than `config.min_note_seconds`.

    The comparison is strict, so a note lasting exactly the minimum survives.
    Input order is preserved.
    """
    config = config or PostprocConfig()
    if config.min_note_seconds <= 0:
        return list(notes)

    limit = config.min_note_seconds - _DURATION_TOLERANCE
    kept = [note for note in notes if note.duration >= limit]
    if len(kept) < len(notes):
        logger.debug("Removed %d short notes", len(notes) - len(kept))
    return kept


def decode_and_clean(
    pred: PianoRollTensors,
    config: Optional[PostprocConfig] = None,
    grid: FrameGrid = FrameGrid(),
    segment_start: int = 0,
    previous_onsets: Optional[np.ndarray] = None,
) -> list[MidiNote]:
    """
    Decode predicted tensors to notes and remove the short ones.

    Args:
        pred: Hierarchy-2 predictions
        config: Threshold and minimum duration
        grid: Frame grid
        segment_start: Absolute frame index of row 0
        previous_onsets: Onset row of the frame before the segment, if known

    Returns:
        Cleaned notes sorted by onset time
    """
    config = config or PostprocConfig()
    notes = tensors_to_notes(pred, config.onset_threshold, grid, segment_start, previous_onsets)
    return clean_notes(notes, config)
