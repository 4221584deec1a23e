"""Dynamic time warping on chroma sequences."""

import numpy as np
from scipy.spatial.distance import cdist

from ..records import AlignmentResult, ChromaSequence


def cosine_cost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Pairwise 1 - cosine similarity.

    A zero frame is at distance 0 from another zero frame and 1 from any
    non-zero frame.
    """
    a_zero = ~np.any(a, axis=1)
    b_zero = ~np.any(b, axis=1)
    cost = np.ones((a.shape[0], b.shape[0]))

    rows = np.flatnonzero(~a_zero)
    cols = np.flatnonzero(~b_zero)
    if rows.size and cols.size:
        cost[np.ix_(rows, cols)] = cdist(a[rows], b[cols], metric="cosine")
    cost[np.ix_(a_zero, b_zero)] = 0.0
    return np.clip(cost, 0.0, None)


def dtw_align(a: ChromaSequence, b: ChromaSequence) -> AlignmentResult:
    """
    Align two sequences with steps (1,1), (1,0) and (0,1).

    Returns:
        Warping path from (0, 0) to (N-1, M-1) and its accumulated cost
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both sequences must be non-empty")

    cost = cosine_cost(a.frames, b.frames)
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row = cost[i - 1]
        diag = acc[i - 1, :-1]
        up = acc[i - 1, 1:]
        # Horizontal steps within a row are sequential
        for j in range(1, m + 1):
            acc[i, j] = row[j - 1] + min(diag[j - 1], up[j - 1], acc[i, j - 1])

    path = [(n - 1, m - 1)]
    i, j = n, m
    while (i, j) != (1, 1):
        # Ties prefer the diagonal
        steps = ((acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j), (acc[i, j - 1], i, j - 1))
        _, i, j = min(steps, key=lambda s: s[0])
        path.append((i - 1, j - 1))
    path.reverse()
    return AlignmentResult(path=path, cost=float(acc[n, m]))
