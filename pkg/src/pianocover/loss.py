"""Hierarchical masked cross-entropy loss.

Only important cells enter the loss: cells whose ground truth is non-zero,
their immediate pitch neighbours, and a random sample of the remaining cells
drawn with a per-matrix probability theta. Each matrix loss is the mean over
its selected cells, the three matrix losses are averaged per hierarchy, and
the two hierarchies are combined as beta * L1 + (1 - beta) * L2.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .config import LossConfig
from .records import N_VELOCITY_CLASSES, PianoRollTensors
from .utils import make_rng

logger = logging.getLogger(__name__)

EPS = 1e-7
MatrixKind = Literal["onset", "frame", "velocity"]
KINDS: tuple[MatrixKind, ...] = ("onset", "frame", "velocity")


@dataclass
class SelectionMask:
    """Boolean (T, 88) selections for each matrix type."""

    onset: np.ndarray
    frame: np.ndarray
    velocity: np.ndarray

    def for_kind(self, kind: MatrixKind) -> np.ndarray:
        return getattr(self, kind)

    @property
    def counts(self) -> dict[str, int]:
        return {kind: int(self.for_kind(kind).sum()) for kind in KINDS}


@dataclass
class LossTerm:
    """One matrix loss: mean over `count` selected cells; `empty` flags an empty mask."""

    value: float
    count: int
    empty: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass
class HierarchyLoss:
    onset: LossTerm
    frame: LossTerm
    velocity: LossTerm

    @property
    def total(self) -> float:
        return (self.onset.value + self.frame.value + self.velocity.value) / 3.0

    def to_dict(self) -> dict:
        return {
            "L": self.total,
            "onset": self.onset.value,
            "frame": self.frame.value,
            "velocity": self.velocity.value,
        }


@dataclass
class LossBreakdown:
    """Combined loss with per-hierarchy, per-matrix terms."""

    L: float
    L1: float
    L2: float
    h1: HierarchyLoss
    h2: HierarchyLoss
    masked_counts: dict[str, int] = field(default_factory=dict)

    @property
    def warnings(self) -> list[str]:
        out = []
        for name, h in (("h1", self.h1), ("h2", self.h2)):
            for kind in KINDS:
                if getattr(h, kind).empty:
                    out.append(f"{name}.{kind}: empty mask")
        return out

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "L1": self.L1,
            "L2": self.L2,
            "h1": self.h1.to_dict(),
            "h2": self.h2.to_dict(),
            "masked_counts": self.masked_counts,
            "warnings": self.warnings,
        }


def _truth_nonzero(truth: PianoRollTensors, kind: MatrixKind) -> np.ndarray:
    if kind == "onset":
        return truth.onsets > 0
    if kind == "frame":
        return truth.frames > 0
    return truth.velocity_classes != 0


def _with_pitch_neighbours(cells: np.ndarray) -> np.ndarray:
    grown = cells.copy()
    grown[:, 1:] |= cells[:, :-1]
    grown[:, :-1] |= cells[:, 1:]
    return grown


def build_mask(truth: PianoRollTensors, config: LossConfig, stream: int = 0) -> SelectionMask:
    """
    Select the cells that enter the loss.

    Args:
        truth: Ground-truth tensors
        config: Sampling rates and seed
        stream: Extra seed component (e.g. the example index in a dataset)

    Returns:
        SelectionMask, deterministic given (config.rng_seed, stream)
    """
    thetas = {
        "onset": config.theta_onset,
        "frame": config.theta_frame,
        "velocity": config.theta_velocity,
    }
    masks = {}
    for k, kind in enumerate(KINDS):
        important = _with_pitch_neighbours(_truth_nonzero(truth, kind))
        # Draw for every cell so the sample does not depend on the truth layout
        rng = make_rng(config.rng_seed, stream, k)
        sampled = rng.random(important.shape) < thetas[kind]
        masks[kind] = important | sampled
    return SelectionMask(**masks)


def _bce(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = np.clip(p, EPS, 1.0 - EPS)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def _velocity_classes(truth: np.ndarray) -> np.ndarray:
    truth = np.asarray(truth)
    if truth.ndim == 3 and truth.shape[-1] == N_VELOCITY_CLASSES:
        return np.argmax(truth, axis=-1)
    return truth.astype(np.int64)


def matrix_loss(
    pred: np.ndarray, truth: np.ndarray, mask: np.ndarray, kind: MatrixKind
) -> LossTerm:
    """
    Mean cross-entropy over the selected cells of one matrix.

    Onset/frame use binary cross-entropy against the (possibly soft) target.
    Velocity uses -log of the predicted probability of the true class; `truth`
    may be one-hot (T, 88, 128) or class indices (T, 88).
    Predictions are clamped to [1e-7, 1 - 1e-7].
    """
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        logger.warning("Empty %s mask; loss term set to 0", kind)
        return LossTerm(0.0, 0, empty=True)

    if kind == "velocity":
        classes = _velocity_classes(truth)[mask]
        probs = np.asarray(pred)[mask]
        p_true = np.take_along_axis(probs, classes[:, None], axis=1)[:, 0]
        cells = -np.log(np.clip(p_true, EPS, 1.0 - EPS))
    else:
        cells = _bce(np.asarray(pred)[mask], np.asarray(truth)[mask])
    return LossTerm(float(cells.sum() / count), count)


def hierarchy_loss(pred: PianoRollTensors, truth: PianoRollTensors, mask: SelectionMask) -> HierarchyLoss:
    """Onset, frame and velocity terms for one hierarchy."""
    return HierarchyLoss(
        onset=matrix_loss(pred.onsets, truth.onsets, mask.onset, "onset"),
        frame=matrix_loss(pred.frames, truth.frames, mask.frame, "frame"),
        velocity=matrix_loss(pred.velocities, truth.velocity_classes, mask.velocity, "velocity"),
    )


def combine(beta: float, l1: float, l2: float) -> float:
    return beta * l1 + (1.0 - beta) * l2


def total_loss(
    pred_h1: PianoRollTensors,
    pred_h2: PianoRollTensors,
    truth: PianoRollTensors,
    config: LossConfig,
    mask: SelectionMask | None = None,
) -> LossBreakdown:
    """
    Combined two-hierarchy loss; both hierarchies share one mask built from the truth.

    Args:
        pred_h1: Hierarchy-1 predictions
        pred_h2: Hierarchy-2 predictions
        truth: Ground truth
        config: Loss configuration
        mask: Precomputed mask (built from `truth` and `config` if omitted)
    """
    if mask is None:
        mask = build_mask(truth, config)
    h1 = hierarchy_loss(pred_h1, truth, mask)
    h2 = hierarchy_loss(pred_h2, truth, mask)
    return LossBreakdown(
        L=combine(config.beta, h1.total, h2.total),
        L1=h1.total,
        L2=h2.total,
        h1=h1,
        h2=h2,
        masked_counts=mask.counts,
    )


def sigmoid_bce_grad(p: np.ndarray, y: np.ndarray, count: int) -> np.ndarray:
    """
    Gradient of the mean masked BCE w.r.t. the sigmoid logits of selected cells.

    Cells whose probability is clamped contribute a constant and get 0.
    """
    if count == 0:
        return np.zeros_like(p)
    unclamped = (p >= EPS) & (p <= 1.0 - EPS)
    return (p - y) * unclamped / count


def softmax_ce_grad(probs: np.ndarray, classes: np.ndarray, count: int) -> np.ndarray:
    """
    Gradient of the mean masked velocity loss w.r.t. softmax logits.

    Args:
        probs: (n, 128) probabilities at the selected cells
        classes: (n,) true classes
        count: Number of selected cells (the mean denominator)
    """
    if count == 0:
        return np.zeros_like(probs)
    grad = probs.copy()
    rows = np.arange(len(classes))
    grad[rows, classes] -= 1.0
    p_true = probs[rows, classes]
    unclamped = (p_true >= EPS) & (p_true <= 1.0 - EPS)
    return grad * unclamped[:, None] / count
