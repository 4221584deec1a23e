"""Cell-level transcription F1."""

import numpy as np

from ..errors import ShapeError
from ..records import F1Scores, PianoRollTensors

POSITIVE_THRESHOLD = 0.5


def _f1(pred: np.ndarray, truth: np.ndarray) -> float:
    tp = int(np.sum(pred & truth))
    n_pred = int(pred.sum())
    n_truth = int(truth.sum())
    if n_pred == 0 and n_truth == 0:
        return 1.0
    if n_pred == 0 or n_truth == 0 or tp == 0:
        return 0.0
    precision = tp / n_pred
    recall = tp / n_truth
    return 2.0 * precision * recall / (precision + recall)


def f1_scores(pred: PianoRollTensors, truth: PianoRollTensors) -> F1Scores:
    """
    Onset, frame and velocity F1 over piano-roll cells.

    Onset/frame cells are positive above 0.5; velocity cells are positive when
    the argmax class is non-zero. F1 is 1 when neither side has positives and
    0 when exactly one side does.
    """
    if pred.onsets.shape != truth.onsets.shape:
        raise ShapeError("T", truth.onsets.shape, pred.onsets.shape)
    if pred.velocities.shape != truth.velocities.shape:
        raise ShapeError("velocity", truth.velocities.shape, pred.velocities.shape)

    return F1Scores(
        onset_f1=_f1(pred.onsets > POSITIVE_THRESHOLD, truth.onsets > POSITIVE_THRESHOLD),
        frame_f1=_f1(pred.frames > POSITIVE_THRESHOLD, truth.frames > POSITIVE_THRESHOLD),
        velocity_f1=_f1(pred.velocity_classes != 0, truth.velocity_classes != 0),
    )
