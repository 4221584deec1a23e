"""Toy two-hierarchy transcription network with hand-derived gradients.

Hierarchy 1: per-frame affine+tanh encoder to an F x Z hidden grid, style
injection, then affine onset/frame/velocity heads reading the flattened grid.
Hierarchy 2: an affine+tanh encoder over hierarchy-1 onset and frame
probabilities whose heads refine hierarchy 1: their logits are added to the
hierarchy-1 logits. Inference uses hierarchy 2.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import inject
from .config import LossConfig, ToyNetHyperParams, TrainConfig
from .errors import ShapeError, TrainingDivergedError
from .evalkit.metrics import f1_scores
from .loss import (
    EPS,
    SelectionMask,
    build_mask,
    combine,
    sigmoid_bce_grad,
    softmax_ce_grad,
    total_loss,
)
from .optim import Adam
from .progress import ProgressCallback, ProgressUpdate
from .records import (
    N_PITCHES,
    N_VELOCITY_CLASSES,
    F1Scores,
    PianoRollTensors,
    StyleVector,
    SyntheticPair,
)
from .utils import make_rng, sigmoid, softmax

logger = logging.getLogger(__name__)

H2_INPUT = 2 * N_PITCHES  # hierarchy-1 onset and frame probabilities


def _param_shapes(hyper: ToyNetHyperParams) -> dict[str, tuple[int, ...]]:
    fz = hyper.F * hyper.Z
    shapes: dict[str, tuple[int, ...]] = {
        "enc1.W": (hyper.F_in, fz),
        "enc1.b": (fz,),
        "enc2.W": (H2_INPUT, fz),
        "enc2.b": (fz,),
    }
    for name in ("dec1", "dec2"):
        shapes.update(
            {
                f"{name}.onset_W": (fz, N_PITCHES),
                f"{name}.onset_b": (N_PITCHES,),
                f"{name}.frame_W": (fz, N_PITCHES),
                f"{name}.frame_b": (N_PITCHES,),
                f"{name}.vel_W": (fz, N_PITCHES, N_VELOCITY_CLASSES),
                f"{name}.vel_b": (N_PITCHES, N_VELOCITY_CLASSES),
            }
        )
    return shapes


@dataclass
class ToyNetParams:
    """All weights of the toy network as named arrays."""

    hyper: ToyNetHyperParams
    arrays: dict[str, np.ndarray]
    use_style: bool = True

    @classmethod
    def init(cls, hyper: ToyNetHyperParams, seed: int = 0, use_style: bool = True) -> "ToyNetParams":
        """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from `seed`."""
        rng = make_rng(seed, 0x70)
        fz = hyper.F * hyper.Z
        fan_in = {"enc1": hyper.F_in, "enc2": H2_INPUT, "dec1": fz, "dec2": fz}
        arrays = {}
        for name, shape in _param_shapes(hyper).items():
            bound = 1.0 / math.sqrt(fan_in[name.split(".")[0]])
            arrays[name] = rng.uniform(-bound, bound, size=shape)

        injection = inject.InjectionParams.init(hyper.Z, hyper.gate_width, seed=seed)
        for key, value in injection.to_dict().items():
            arrays[f"inject.{key}"] = value
        return cls(hyper=hyper, arrays=arrays, use_style=use_style)

    @property
    def injection(self) -> inject.InjectionParams:
        return inject.InjectionParams.from_dict(
            {key: self.arrays[f"inject.{key}"] for key in inject.PARAM_NAMES}
        )

    def validate(self) -> None:
        expected = _param_shapes(self.hyper)
        for name, shape in expected.items():
            if name not in self.arrays:
                raise ShapeError(name, shape, None)
            if self.arrays[name].shape != shape:
                raise ShapeError(name, shape, self.arrays[name].shape)
        self.injection.validate()
        if self.injection.Z != self.hyper.Z:
            raise ShapeError("Z", self.hyper.Z, self.injection.Z)

    def copy(self) -> "ToyNetParams":
        return ToyNetParams(
            hyper=self.hyper,
            arrays={k: v.copy() for k, v in self.arrays.items()},
            use_style=self.use_style,
        )


@dataclass
class _Heads:
    """Logits and probabilities of one hierarchy; velocity only at selected cells."""

    onset_logit: np.ndarray  # (T, 88)
    frame_logit: np.ndarray  # (T, 88)
    vel_logit: np.ndarray  # (n, 128)
    vel_cells: tuple[np.ndarray, np.ndarray]  # (t, p) indices

    @cached_property
    def onset(self) -> np.ndarray:
        return sigmoid(self.onset_logit)

    @cached_property
    def frame(self) -> np.ndarray:
        return sigmoid(self.frame_logit)

    @cached_property
    def vel_probs(self) -> np.ndarray:
        return softmax(self.vel_logit, axis=1)


@dataclass
class _Trace:
    x: np.ndarray
    enc1: np.ndarray  # tanh output, (T, F*Z)
    inject_cache: Optional[inject.InjectionCache]
    flat1: np.ndarray
    h1: _Heads
    p_on1: np.ndarray
    p_fr1: np.ndarray
    enc2: np.ndarray
    h2: _Heads


def _check_input(params: ToyNetParams, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError("input rank", 2, features.ndim)
    if features.shape[1] != params.hyper.F_in:
        raise ShapeError("F_in", params.hyper.F_in, features.shape[1])
    return features


def _style_values(style: StyleVector | np.ndarray) -> np.ndarray:
    return style.values if isinstance(style, StyleVector) else np.asarray(style, dtype=np.float64)


def _encode1(params: ToyNetParams, x: np.ndarray, style) -> tuple[np.ndarray, Optional[inject.InjectionCache], np.ndarray]:
    a = params.arrays
    hyper = params.hyper
    enc1 = np.tanh(x @ a["enc1.W"] + a["enc1.b"])
    if not params.use_style:
        return enc1, None, enc1
    grid = enc1.reshape(x.shape[0], hyper.F, hyper.Z)
    injected, cache = inject.forward(params.injection, grid, _style_values(style))
    return enc1, cache, injected.reshape(x.shape[0], -1)


def _velocity_logits_at(flat: np.ndarray, W: np.ndarray, b: np.ndarray, cells) -> np.ndarray:
    t_idx, p_idx = cells
    logits = np.empty((len(t_idx), N_VELOCITY_CLASSES))
    for p in np.unique(p_idx):
        sel = p_idx == p
        logits[sel] = flat[t_idx[sel]] @ W[:, p, :] + b[p]
    return logits


def _heads(params: ToyNetParams, prefix: str, flat: np.ndarray, vel_cells, base: Optional[_Heads] = None) -> _Heads:
    """Head logits of one hierarchy, added to `base` (the previous hierarchy's logits) when given."""
    a = params.arrays
    onset = flat @ a[f"{prefix}.onset_W"] + a[f"{prefix}.onset_b"]
    frame = flat @ a[f"{prefix}.frame_W"] + a[f"{prefix}.frame_b"]
    vel = _velocity_logits_at(flat, a[f"{prefix}.vel_W"], a[f"{prefix}.vel_b"], vel_cells)
    if base is not None:
        onset = onset + base.onset_logit
        frame = frame + base.frame_logit
        vel = vel + base.vel_logit
    return _Heads(onset, frame, vel, vel_cells)


def _full_velocity_logits(params: ToyNetParams, prefix: str, flat: np.ndarray) -> np.ndarray:
    W = params.arrays[f"{prefix}.vel_W"]
    b = params.arrays[f"{prefix}.vel_b"]
    logits = (flat @ W.reshape(W.shape[0], -1)).reshape(flat.shape[0], N_PITCHES, N_VELOCITY_CLASSES)
    return logits + b


def _forward_trace(params: ToyNetParams, x: np.ndarray, style, vel_cells) -> _Trace:
    a = params.arrays
    enc1, cache, flat1 = _encode1(params, x, style)
    h1 = _heads(params, "dec1", flat1, vel_cells)
    p_on1, p_fr1 = h1.onset, h1.frame
    x2 = np.concatenate([p_on1, p_fr1], axis=1)
    enc2 = np.tanh(x2 @ a["enc2.W"] + a["enc2.b"])
    h2 = _heads(params, "dec2", enc2, vel_cells, base=h1)
    return _Trace(x, enc1, cache, flat1, h1, p_on1, p_fr1, enc2, h2)


def forward_full(
    params: ToyNetParams, pair: SyntheticPair
) -> tuple[PianoRollTensors, PianoRollTensors]:
    """
    Run both hierarchies on one example.

    Returns:
        (hierarchy-1 predictions, hierarchy-2 predictions) with full
        128-class velocity distributions
    """
    return _forward_full(params, pair.input_features, pair.style)


def _forward_full(params: ToyNetParams, features: np.ndarray, style) -> tuple[PianoRollTensors, PianoRollTensors]:
    params.validate()
    x = _check_input(params, features)
    no_cells = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    trace = _forward_trace(params, x, style, no_cells)
    vel1 = _full_velocity_logits(params, "dec1", trace.flat1)
    vel2 = vel1 + _full_velocity_logits(params, "dec2", trace.enc2)
    pred1 = PianoRollTensors(trace.p_on1, trace.p_fr1, softmax(vel1, axis=-1))
    pred2 = PianoRollTensors(trace.h2.onset, trace.h2.frame, softmax(vel2, axis=-1))
    return pred1, pred2


def infer(params: ToyNetParams, input_features: np.ndarray, style: StyleVector) -> PianoRollTensors:
    """Hierarchy-2 predictions for decoding."""
    return _forward_full(params, input_features, style)[1]


@dataclass
class _TargetCache:
    """Per-example truth arrays gathered once for the training loop."""

    onsets: np.ndarray
    frames: np.ndarray
    mask: SelectionMask
    vel_cells: tuple[np.ndarray, np.ndarray]
    vel_classes: np.ndarray

    @classmethod
    def build(cls, truth: PianoRollTensors, mask: SelectionMask) -> "_TargetCache":
        cells = np.nonzero(mask.velocity)
        return cls(
            onsets=truth.onsets,
            frames=truth.frames,
            mask=mask,
            vel_cells=(cells[0].astype(np.int64), cells[1].astype(np.int64)),
            vel_classes=truth.velocity_classes[cells].astype(np.int64),
        )


@dataclass
class PairLoss:
    L: float
    L1: float
    L2: float


def _bce_mean(p: np.ndarray, y: np.ndarray, mask: np.ndarray) -> float:
    count = int(mask.sum())
    if count == 0:
        return 0.0
    pc = np.clip(p[mask], EPS, 1.0 - EPS)
    yc = y[mask]
    return float(-(yc * np.log(pc) + (1.0 - yc) * np.log(1.0 - pc)).sum() / count)


def _vel_mean(probs: np.ndarray, classes: np.ndarray) -> float:
    if len(classes) == 0:
        return 0.0
    p_true = probs[np.arange(len(classes)), classes]
    return float(-np.log(np.clip(p_true, EPS, 1.0 - EPS)).sum() / len(classes))


def _hierarchy_value(heads: _Heads, target: _TargetCache) -> float:
    return (
        _bce_mean(heads.onset, target.onsets, target.mask.onset)
        + _bce_mean(heads.frame, target.frames, target.mask.frame)
        + _vel_mean(heads.vel_probs, target.vel_classes)
    ) / 3.0


def _dense_grad(p: np.ndarray, y: np.ndarray, mask: np.ndarray, weight: float) -> np.ndarray:
    grad = np.zeros_like(p)
    count = int(mask.sum())
    grad[mask] = weight * sigmoid_bce_grad(p[mask], y[mask], count)
    return grad


def _head_backward(
    params: ToyNetParams,
    prefix: str,
    flat: np.ndarray,
    heads: _Heads,
    d_onset_logit: np.ndarray,
    d_frame_logit: np.ndarray,
    d_vel_logit: np.ndarray,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    """Accumulate head gradients; returns the gradient w.r.t. `flat`."""
    a = params.arrays
    grads[f"{prefix}.onset_W"] = flat.T @ d_onset_logit
    grads[f"{prefix}.onset_b"] = d_onset_logit.sum(axis=0)
    grads[f"{prefix}.frame_W"] = flat.T @ d_frame_logit
    grads[f"{prefix}.frame_b"] = d_frame_logit.sum(axis=0)

    d_flat = d_onset_logit @ a[f"{prefix}.onset_W"].T + d_frame_logit @ a[f"{prefix}.frame_W"].T

    W = a[f"{prefix}.vel_W"]
    dW = np.zeros_like(W)
    db = np.zeros_like(a[f"{prefix}.vel_b"])
    t_idx, p_idx = heads.vel_cells
    for p in np.unique(p_idx):
        sel = p_idx == p
        rows = t_idx[sel]
        g = d_vel_logit[sel]
        dW[:, p, :] = flat[rows].T @ g
        db[p] = g.sum(axis=0)
        d_flat[rows] += g @ W[:, p, :].T
    grads[f"{prefix}.vel_W"] = dW
    grads[f"{prefix}.vel_b"] = db
    return d_flat


def loss_and_grads(
    params: ToyNetParams,
    features: np.ndarray,
    style: StyleVector | np.ndarray,
    truth: PianoRollTensors,
    mask: SelectionMask,
    beta: float,
) -> tuple[PairLoss, dict[str, np.ndarray]]:
    """
    Two-hierarchy loss of one example and its exact gradient for every weight.

    The value equals loss.total_loss on forward_full's predictions with the same mask.
    """
    target = _TargetCache.build(truth, mask)
    return _loss_and_grads(params, _check_input(params, features), style, target, beta)


def _loss_and_grads(
    params: ToyNetParams, x: np.ndarray, style, target: _TargetCache, beta: float
) -> tuple[PairLoss, dict[str, np.ndarray]]:
    a = params.arrays
    hyper = params.hyper
    tr = _forward_trace(params, x, style, target.vel_cells)

    l1 = _hierarchy_value(tr.h1, target)
    l2 = _hierarchy_value(tr.h2, target)
    result = PairLoss(L=combine(beta, l1, l2), L1=l1, L2=l2)

    w1 = beta / 3.0
    w2 = (1.0 - beta) / 3.0
    n_vel = len(target.vel_classes)
    m = target.mask
    grads: dict[str, np.ndarray] = {}

    # Hierarchy 2
    d_on2 = _dense_grad(tr.h2.onset, target.onsets, m.onset, w2)
    d_fr2 = _dense_grad(tr.h2.frame, target.frames, m.frame, w2)
    d_v2 = w2 * softmax_ce_grad(tr.h2.vel_probs, target.vel_classes, n_vel)
    d_enc2 = _head_backward(params, "dec2", tr.enc2, tr.h2, d_on2, d_fr2, d_v2, grads)

    d_a2 = d_enc2 * (1.0 - tr.enc2**2)
    grads["enc2.W"] = np.concatenate([tr.p_on1, tr.p_fr1], axis=1).T @ d_a2
    grads["enc2.b"] = d_a2.sum(axis=0)
    d_x2 = d_a2 @ a["enc2.W"].T

    # Hierarchy 1: its own loss, the residual logit path and hierarchy 2's input
    p_on1, p_fr1 = tr.p_on1, tr.p_fr1
    d_on1 = (
        _dense_grad(p_on1, target.onsets, m.onset, w1)
        + d_on2
        + d_x2[:, :N_PITCHES] * p_on1 * (1.0 - p_on1)
    )
    d_fr1 = (
        _dense_grad(p_fr1, target.frames, m.frame, w1)
        + d_fr2
        + d_x2[:, N_PITCHES:] * p_fr1 * (1.0 - p_fr1)
    )
    d_v1 = w1 * softmax_ce_grad(tr.h1.vel_probs, target.vel_classes, n_vel) + d_v2
    d_flat1 = _head_backward(params, "dec1", tr.flat1, tr.h1, d_on1, d_fr1, d_v1, grads)

    if tr.inject_cache is not None:
        grid_grad = d_flat1.reshape(x.shape[0], hyper.F, hyper.Z)
        inj = inject.backward(tr.inject_cache, grid_grad)
        for key in inject.PARAM_NAMES:
            grads[f"inject.{key}"] = inj[key]
        d_enc1 = inj["h"].reshape(x.shape[0], -1)
    else:
        for key in inject.PARAM_NAMES:
            grads[f"inject.{key}"] = np.zeros_like(a[f"inject.{key}"])
        d_enc1 = d_flat1

    d_a1 = d_enc1 * (1.0 - tr.enc1**2)
    grads["enc1.W"] = x.T @ d_a1
    grads["enc1.b"] = d_a1.sum(axis=0)
    return result, grads


@dataclass
class TrainingTrace:
    """Per-epoch mean losses (evaluated before that epoch's update)."""

    epochs: list[int] = field(default_factory=list)
    L: list[float] = field(default_factory=list)
    L1: list[float] = field(default_factory=list)
    L2: list[float] = field(default_factory=list)

    def append(self, epoch: int, loss: PairLoss) -> None:
        self.epochs.append(epoch)
        self.L.append(loss.L)
        self.L1.append(loss.L1)
        self.L2.append(loss.L2)

    def to_csv(self) -> str:
        lines = ["epoch,L,L1,L2"]
        for row in zip(self.epochs, self.L, self.L1, self.L2):
            lines.append(f"{row[0]},{row[1]!r},{row[2]!r},{row[3]!r}")
        return "\n".join(lines) + "\n"


def dataset_masks(dataset: Sequence[SyntheticPair], loss_config: LossConfig) -> list[SelectionMask]:
    """One fixed mask per example, seeded by (rng_seed, example index)."""
    return [build_mask(pair.target, loss_config, stream=i) for i, pair in enumerate(dataset)]


def dataset_loss_and_grads(
    params: ToyNetParams,
    targets: Sequence[tuple[np.ndarray, np.ndarray, _TargetCache]],
    beta: float,
    workers: int = 1,
) -> tuple[PairLoss, dict[str, np.ndarray]]:
    """Mean loss and gradient over examples, reduced in example order."""

    def one(item):
        x, style, target = item
        return _loss_and_grads(params, x, style, target, beta)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, targets))
    else:
        results = [one(item) for item in targets]

    n = len(results)
    total = {name: np.zeros_like(value) for name, value in params.arrays.items()}
    L = L1 = L2 = 0.0
    for pair_loss, grads in results:
        L += pair_loss.L
        L1 += pair_loss.L1
        L2 += pair_loss.L2
        for name in total:
            total[name] += grads[name]
    for name in total:
        total[name] /= n
    return PairLoss(L / n, L1 / n, L2 / n), total


def train(
    params: ToyNetParams,
    dataset: Sequence[SyntheticPair],
    config: TrainConfig,
    loss_config: LossConfig,
    progress_callback: Optional[ProgressCallback] = None,
    workers: int = 1,
) -> TrainingTrace:
    """
    Full-batch Adam training, updating `params` in place.

    Args:
        params: Initial weights (modified)
        dataset: Training examples
        config: Optimizer settings
        loss_config: Loss settings; masks are fixed per example
        progress_callback: Optional per-epoch progress reporting
        workers: Threads for per-example gradients (reduction order is fixed)

    Returns:
        Per-epoch loss trace

    Raises:
        TrainingDivergedError: If the loss becomes non-finite
    """
    if not dataset:
        raise ValueError("dataset is empty")
    params.validate()
    params.use_style = config.use_style

    masks = dataset_masks(dataset, loss_config)
    targets = [
        (_check_input(params, pair.input_features), pair.style.values, _TargetCache.build(pair.target, mask))
        for pair, mask in zip(dataset, masks)
    ]
    optimizer = Adam(lr=config.lr, beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps)
    trace = TrainingTrace()

    for epoch in range(config.epochs):
        loss, grads = dataset_loss_and_grads(params, targets, loss_config.beta, workers)
        if not math.isfinite(loss.L):
            logger.error("Training diverged at epoch %d (loss %r)", epoch, loss.L)
            raise TrainingDivergedError(epoch, loss.L)
        trace.append(epoch, loss)
        logger.info("epoch %d: L=%.6f L1=%.6f L2=%.6f", epoch, loss.L, loss.L1, loss.L2)

        if progress_callback:
            progress_callback(
                ProgressUpdate(
                    stage="training",
                    percent=100.0 * (epoch + 1) / config.epochs,
                    message=f"epoch {epoch + 1}/{config.epochs} loss {loss.L:.4f}",
                    epoch=epoch,
                    loss=loss.L,
                )
            )
        optimizer.step(params.arrays, grads)

    return trace


@dataclass
class EvaluationReport:
    """Mean masked loss and mean cell F1 of both hierarchies over a dataset."""

    n_pairs: int
    L: float
    L1: float
    L2: float
    f1_h1: F1Scores
    f1_h2: F1Scores

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "L": self.L,
            "L1": self.L1,
            "L2": self.L2,
            "h1": self.f1_h1.to_dict(),
            "h2": self.f1_h2.to_dict(),
        }


def _mean_scores(scores: list[F1Scores]) -> F1Scores:
    return F1Scores(
        onset_f1=float(np.mean([s.onset_f1 for s in scores])),
        frame_f1=float(np.mean([s.frame_f1 for s in scores])),
        velocity_f1=float(np.mean([s.velocity_f1 for s in scores])),
    )


def evaluate(
    params: ToyNetParams, dataset: Sequence[SyntheticPair], loss_config: LossConfig
) -> EvaluationReport:
    """
    Score a network on a dataset.

    The loss uses the same per-example masks as training. F1 compares each
    hierarchy's full prediction with the target; hierarchy 2 is what
    inference decodes.
    """
    if not dataset:
        raise ValueError("dataset is empty")

    losses, scores1, scores2 = [], [], []
    for pair, mask in zip(dataset, dataset_masks(dataset, loss_config)):
        pred1, pred2 = forward_full(params, pair)
        losses.append(total_loss(pred1, pred2, pair.target, loss_config, mask))
        scores1.append(f1_scores(pred1, pair.target))
        scores2.append(f1_scores(pred2, pair.target))

    report = EvaluationReport(
        n_pairs=len(dataset),
        L=float(np.mean([b.L for b in losses])),
        L1=float(np.mean([b.L1 for b in losses])),
        L2=float(np.mean([b.L2 for b in losses])),
        f1_h1=_mean_scores(scores1),
        f1_h2=_mean_scores(scores2),
    )
    logger.info("Evaluated %d pairs: L=%.6f F1=%.4f", report.n_pairs, report.L, report.f1_h2.average)
    return report
