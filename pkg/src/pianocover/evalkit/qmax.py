"""Q_max cover-song similarity.

Chroma sequences are key-aligned by the optimal transposition index, delay
embedded, compared through a mutual nearest-neighbour cross-recurrence plot,
and scored by the longest penalized diagonal path through that plot.
Smaller distances mean more similar recordings.
"""

import csv
import io
import logging
import math
from typing import Iterable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from ..config import QmaxParams
from ..records import N_CHROMA, ChromaSequence, QmaxResult

logger = logging.getLogger(__name__)

SUMMARY_FIELDS = ("a", "b", "qmax", "distance", "oti", "n_a", "n_b")


def global_chroma(frames: np.ndarray) -> np.ndarray:
    """Summed chroma scaled to unit max (zeros for silent input)."""
    total = frames.sum(axis=0)
    peak = total.max() if total.size else 0.0
    return total / peak if peak > 0 else np.zeros(N_CHROMA)


def optimal_transposition_index(a: np.ndarray, b: np.ndarray) -> int:
    """Upward pitch-class rotation of `b` that best matches `a`'s global chroma."""
    ga = global_chroma(a)
    gb = global_chroma(b)
    scores = [float(np.dot(ga, np.roll(gb, shift))) for shift in range(N_CHROMA)]
    return int(np.argmax(scores))


def delay_embed(frames: np.ndarray, m_embed: int, tau_lag: int) -> np.ndarray:
    """Stack `m_embed` frames spaced `tau_lag` apart into one row per start frame."""
    n_rows = frames.shape[0] - (m_embed - 1) * tau_lag
    if n_rows < 1:
        return np.zeros((0, m_embed * frames.shape[1]))
    return np.hstack([frames[k * tau_lag : k * tau_lag + n_rows] for k in range(m_embed)])


def cross_recurrence(x: np.ndarray, y: np.ndarray, kappa: float) -> np.ndarray:
    """
    Binary cross-recurrence plot under the mutual nearest-neighbour rule.

    Cell (i, j) is set when y_j lies within the kappa-quantile of x_i's
    distances to y, and x_i within the kappa-quantile of y_j's distances to x.
    """
    distances = cdist(x, y, metric="euclidean")
    row_radius = np.percentile(distances, kappa * 100.0, axis=1)
    col_radius = np.percentile(distances, kappa * 100.0, axis=0)
    return (distances <= row_radius[:, None]) & (distances <= col_radius[None, :])


def alignment_scores(crp: np.ndarray, gamma_o: float, gamma_e: float) -> np.ndarray:
    """
    Cumulative local-alignment matrix over a cross-recurrence plot.

    Matches extend the best of the (1,1), (2,1) and (1,2) predecessors by one.
    Elsewhere the best predecessor decays by gamma_o when that predecessor was
    a match (disruption onset) and by gamma_e otherwise (extension), floored
    at zero. Cells outside the plot count as zero-score non-matches.
    """
    n, m = crp.shape
    # Two rows/columns of zero padding stand in for the out-of-plot predecessors
    score = np.zeros((n + 2, m + 2))
    penalty = np.full((n + 2, m + 2), gamma_e)
    penalty[2:, 2:] = np.where(crp, gamma_o, gamma_e)

    for i in range(2, n + 2):
        preds = (
            (score[i - 1, 1 : m + 1], penalty[i - 1, 1 : m + 1]),  # (i-1, j-1)
            (score[i - 2, 1 : m + 1], penalty[i - 2, 1 : m + 1]),  # (i-2, j-1)
            (score[i - 1, 0:m], penalty[i - 1, 0:m]),  # (i-1, j-2)
        )
        best = np.maximum.reduce([s for s, _ in preds])
        decayed = np.maximum.reduce([np.zeros(m)] + [s - p for s, p in preds])
        score[i, 2:] = np.where(crp[i - 2], best + 1.0, decayed)
    return score[2:, 2:]


def qmax(a: ChromaSequence, b: ChromaSequence, params: Optional[QmaxParams] = None) -> QmaxResult:
    """
    Q_max similarity of `b` against `a`.

    `b` is rotated by the optimal transposition index before embedding. The
    distance is sqrt(len(b)) / qmax, infinite when no alignment exists.

    Raises:
        ValueError: If either sequence is not longer than m_embed * tau_lag
    """
    params = params or QmaxParams()
    span = params.m_embed * params.tau_lag
    if len(a) <= span or len(b) <= span:
        raise ValueError(f"both sequences need more than {span} frames (got {len(a)} and {len(b)})")

    oti = optimal_transposition_index(a.frames, b.frames)
    b_frames = np.roll(b.frames, oti, axis=1)

    x = delay_embed(a.frames, params.m_embed, params.tau_lag)
    y = delay_embed(b_frames, params.m_embed, params.tau_lag)
    crp = cross_recurrence(x, y, params.kappa)
    best = float(alignment_scores(crp, params.gamma_o, params.gamma_e).max())

    if best <= 0:
        logger.warning("Q_max is 0 (no recurrent alignment); distance is infinite")
        distance = math.inf
    else:
        distance = math.sqrt(len(b)) / best
    return QmaxResult(qmax=best, distance=distance, oti=oti, n_a=len(a), n_b=len(b))


def qmax_summary_csv(rows: Iterable[tuple[str, str, QmaxResult]]) -> str:
    """
    CSV of per-pair results with a final `mean` row averaging the finite distances.

    Columns: a, b, qmax, distance, oti, n_a, n_b. Infinite distances are
    written as `inf` and left out of the mean.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)

    qmaxes, distances = [], []
    for name_a, name_b, result in rows:
        writer.writerow(
            [name_a, name_b, repr(result.qmax), "inf" if result.infinite else repr(result.distance),
             result.oti, result.n_a, result.n_b]
        )
        qmaxes.append(result.qmax)
        if not result.infinite:
            distances.append(result.distance)

    mean_qmax = repr(float(np.mean(qmaxes))) if qmaxes else ""
    mean_distance = repr(float(np.mean(distances))) if distances else "inf"
    writer.writerow(["mean", "", mean_qmax, mean_distance, "", "", ""])
    return buffer.getvalue()
