"""Style vector extraction.

A cover's style is summarised by three distributions: per-segment onset rate,
note velocity and note pitch. Each is z-scored and histogrammed into 8 levels
with the edges below; the three 8-bin histograms are concatenated.
"""

from typing import Sequence

import numpy as np

from .errors import EmptyCoverError
from .records import STYLE_BLOCK, FrameGrid, MidiNote, StyleSamples, StyleVector
from .roll import cover_frames, note_span

BIN_EDGES = np.array([-2.0, -4.0 / 3.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0])


def collect_samples(notes: list[MidiNote], grid: FrameGrid = FrameGrid()) -> StyleSamples:
    """
    Gather onset rates, velocities and pitches from a cover.

    The cover is tiled into consecutive segments from frame 0; a trailing
    partial segment uses its own frame count as the denominator.

    Raises:
        EmptyCoverError: If `notes` is empty
    """
    if not notes:
        raise EmptyCoverError()

    total = cover_frames(notes, grid)
    seg_len = grid.frames_per_segment
    n_segments = -(-total // seg_len)

    counts = np.zeros(n_segments, dtype=np.int64)
    for note in notes:
        start, _ = note_span(note, grid)
        counts[start // seg_len] += 1

    denominators = np.full(n_segments, seg_len, dtype=np.float64)
    denominators[-1] = total - seg_len * (n_segments - 1)
    onset_rates = (counts / denominators).tolist()

    return StyleSamples(
        onset_rates=onset_rates,
        velocities=[n.velocity for n in notes],
        pitches=[n.pitch for n in notes],
    )


def zscore(samples: Sequence[float]) -> np.ndarray:
    """Standardize with the population standard deviation; constant input maps to 0."""
    x = np.asarray(samples, dtype=np.float64)
    # Anchoring at the minimum makes integer inputs exactly shift-invariant
    x = x - x.min()
    std = x.std()
    if std == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / std


def histogram_levels(z: Sequence[float]) -> np.ndarray:
    """
    Fraction of already-standardized values in each of the 8 levels.

    Level 0 holds x <= -2, level k holds edge[k-1] < x <= edge[k], level 7 holds x > 2.
    """
    z = np.asarray(z, dtype=np.float64)
    levels = np.digitize(z, BIN_EDGES, right=True)
    return np.bincount(levels, minlength=STYLE_BLOCK).astype(np.float64) / len(z)


def quantize_block(samples: Sequence[float]) -> np.ndarray:
    """Z-score `samples` and histogram them into 8 probability levels."""
    if len(samples) == 0:
        raise ValueError("cannot quantize an empty sample list")
    return histogram_levels(zscore(samples))


def extract_style_vector(notes: list[MidiNote], grid: FrameGrid = FrameGrid()) -> StyleVector:
    """Compute the 24-dimensional style vector of a cover."""
    samples = collect_samples(notes, grid)
    return StyleVector(
        np.concatenate(
            [
                quantize_block(samples.onset_rates),
                quantize_block(samples.velocities),
                quantize_block(samples.pitches),
            ]
        )
    )


def average_style_vectors(vectors: Sequence[StyleVector]) -> StyleVector:
    """Elementwise mean; each block of the result is still a probability vector."""
    if not vectors:
        raise ValueError("no style vectors to average")
    return StyleVector(np.mean([v.values for v in vectors], axis=0))


def select_by_density(
    covers: Sequence[list[MidiNote]], top: int
) -> tuple[list[int], list[int]]:
    """
    Pick calm and intense covers by note count.

    Args:
        covers: Note lists, one per cover
        top: Group size

    Returns:
        (calm indices, intense indices): the `top` sparsest and densest covers,
        ties broken by input order
    """
    if top < 1:
        raise ValueError("top must be at least 1")
    order = sorted(range(len(covers)), key=lambda i: (len(covers[i]), i))
    top = min(top, len(order))
    return order[:top], order[::-1][:top]
