"""Gated style injection.

The style vector is mapped into the hidden space (h_sv = W v + b) and mixed
into every encoder hidden state through a learned vector gate:

    r = sigmoid(W2 relu(W1 h + b1) + b2)
    out = r * h + (1 - r) * h_sv
"""

from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from .errors import ShapeError
from .records import STYLE_DIM, StyleVector
from .utils import make_rng, sigmoid

PARAM_NAMES = ("W", "b", "gate_w1", "gate_b1", "gate_w2", "gate_b2")


@dataclass
class InjectionParams:
    """Weights of the injection layer (Z = hidden width, G = gate hidden width)."""

    W: np.ndarray  # (Z, 24)
    b: np.ndarray  # (Z,)
    gate_w1: np.ndarray  # (G, Z)
    gate_b1: np.ndarray  # (G,)
    gate_w2: np.ndarray  # (Z, G)
    gate_b2: np.ndarray  # (Z,)

    @property
    def Z(self) -> int:
        return self.W.shape[0]

    @property
    def G(self) -> int:
        return self.gate_w1.shape[0]

    @classmethod
    def init(cls, Z: int, G: int | None = None, seed: int = 0) -> "InjectionParams":
        """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], deterministic from `seed`."""
        G = Z if G is None else G
        rng = make_rng(seed, 0x1A)

        def uniform(shape, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        return cls(
            W=uniform((Z, STYLE_DIM), STYLE_DIM),
            b=uniform((Z,), STYLE_DIM),
            gate_w1=uniform((G, Z), Z),
            gate_b1=uniform((G,), Z),
            gate_w2=uniform((Z, G), G),
            gate_b2=uniform((Z,), G),
        )

    def to_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, np.ndarray]) -> "InjectionParams":
        return cls(**{name: np.asarray(data[name], dtype=np.float64) for name in PARAM_NAMES})

    def validate(self) -> None:
        """Raise ShapeError naming the first inconsistent field."""
        Z, G = self.Z, self.G
        expected = {
            "W": (Z, STYLE_DIM),
            "b": (Z,),
            "gate_w1": (G, Z),
            "gate_b1": (G,),
            "gate_w2": (Z, G),
            "gate_b2": (Z,),
        }
        for name, shape in expected.items():
            value = getattr(self, name)
            if value.shape != shape:
                raise ShapeError(name, shape, value.shape)
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} contains non-finite values")


@dataclass
class InjectionCache:
    """Intermediates kept by forward for backward."""

    params: InjectionParams
    h: np.ndarray  # (T, F, Z)
    v_s: np.ndarray  # (24,)
    h_sv: np.ndarray  # (Z,)
    pre_relu: np.ndarray  # (T, F, G)
    hidden: np.ndarray  # (T, F, G)
    gate: np.ndarray  # (T, F, Z)


def _style_values(v_s: Union[StyleVector, np.ndarray]) -> np.ndarray:
    values = v_s.values if isinstance(v_s, StyleVector) else np.asarray(v_s, dtype=np.float64)
    if values.shape != (STYLE_DIM,):
        raise ShapeError("style", (STYLE_DIM,), values.shape)
    return values


def forward(
    params: InjectionParams, h: np.ndarray, v_s: Union[StyleVector, np.ndarray]
) -> tuple[np.ndarray, InjectionCache]:
    """
    Inject a style vector into a T x F x Z hidden grid.

    Args:
        params: Layer weights
        h: Encoder hidden states
        v_s: Style vector (24 values)

    Returns:
        (output grid, cache for backward)

    Raises:
        ShapeError: If the grid width does not match Z or params are inconsistent
    """
    params.validate()
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 3:
        raise ShapeError("grid rank", 3, h.ndim)
    if h.shape[2] != params.Z:
        raise ShapeError("Z", params.Z, h.shape[2])
    v = _style_values(v_s)

    h_sv = params.W @ v + params.b
    pre_relu = h @ params.gate_w1.T + params.gate_b1
    hidden = np.maximum(pre_relu, 0.0)
    gate = sigmoid(hidden @ params.gate_w2.T + params.gate_b2)
    out = gate * h + (1.0 - gate) * h_sv

    return out, InjectionCache(params, h, v, h_sv, pre_relu, hidden, gate)


def backward(cache: InjectionCache, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """
    Gradients of sum(upstream * output) for every parameter and input.

    Returns:
        Dict keyed by the parameter names plus "h" (grid) and "v_s" (style)
    """
    p = cache.params
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != cache.h.shape:
        raise ShapeError("upstream", cache.h.shape, g.shape)
    r = cache.gate

    d_hsv = np.einsum("tfz,tfz->z", g, 1.0 - r)
    d_gate_logit = g * (cache.h - cache.h_sv) * r * (1.0 - r)
    d_hidden = d_gate_logit @ p.gate_w2
    d_pre = d_hidden * (cache.pre_relu > 0)

    return {
        "W": np.outer(d_hsv, cache.v_s),
        "b": d_hsv,
        "gate_w1": np.einsum("tfg,tfz->gz", d_pre, cache.h),
        "gate_b1": d_pre.sum(axis=(0, 1)),
        "gate_w2": np.einsum("tfz,tfg->zg", d_gate_logit, cache.hidden),
        "gate_b2": d_gate_logit.sum(axis=(0, 1)),
        "h": g * r + d_pre @ p.gate_w1,
        "v_s": p.W.T @ d_hsv,
    }
