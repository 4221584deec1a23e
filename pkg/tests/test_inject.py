"""Tests for the gated style-injection layer."""

import math

import numpy as np
import pytest

from pianocover.errors import ShapeError
from pianocover.inject import PARAM_NAMES, InjectionParams, backward, forward


def random_case(seed: int, T: int = 3, F: int = 2, Z: int = 4, G: int = 3):
    rng = np.random.default_rng(seed)
    params = InjectionParams.init(Z, G, seed=seed)
    params.gate_w1 = rng.normal(size=(G, Z))
    params.gate_w2 = rng.normal(size=(Z, G))
    # Keep ReLU inputs clear of the kink so central differences stay smooth
    while True:
        h = rng.normal(size=(T, F, Z))
        if np.abs(h @ params.gate_w1.T + params.gate_b1).min() > 1e-3:
            break
    v_s = rng.dirichlet(np.ones(8), size=3).ravel()
    upstream = rng.normal(size=(T, F, Z))
    return params, h, v_s, upstream


def objective(params: InjectionParams, h: np.ndarray, v_s: np.ndarray, upstream: np.ndarray) -> float:
    out, _ = forward(params, h, v_s)
    return float(np.sum(upstream * out))


def numeric_grad(fn, array: np.ndarray, step: float = 1e-4) -> np.ndarray:
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + step
        plus = fn()
        array[idx] = original - step
        minus = fn()
        array[idx] = original
        grad[idx] = (plus - minus) / (2 * step)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


class TestInit:
    """Tests for parameter initialization."""

    def test_shapes(self):
        """Fields follow Z and G; G defaults to Z."""
        params = InjectionParams.init(Z=5)

        assert params.W.shape == (5, 24)
        assert params.gate_w1.shape == (5, 5)
        assert params.G == 5
        params.validate()

    def test_uniform_bounds(self):
        """Weights lie within 1/sqrt(fan_in)."""
        params = InjectionParams.init(Z=16, G=8, seed=3)

        assert np.abs(params.W).max() <= 1 / math.sqrt(24)
        assert np.abs(params.gate_w1).max() <= 1 / math.sqrt(16)
        assert np.abs(params.gate_w2).max() <= 1 / math.sqrt(8)

    def test_deterministic(self):
        """The same seed gives identical weights."""
        a = InjectionParams.init(Z=4, seed=11).to_dict()
        b = InjectionParams.init(Z=4, seed=11).to_dict()
        assert all(np.array_equal(a[k], b[k]) for k in PARAM_NAMES)

    def test_validate_names_field(self):
        """Inconsistent shapes name the offending field."""
        params = InjectionParams.init(Z=4, G=3)
        params.gate_b1 = np.zeros(2)

        with pytest.raises(ShapeError) as exc_info:
            params.validate()
        assert exc_info.value.dimension == "gate_b1"


class TestForward:
    """Tests for the injection forward pass."""

    def test_hand_computed_cell(self):
        """A Z=2, G=2 single cell matches a scalar evaluation."""
        W = np.zeros((2, 24))
        W[0, 0], W[0, 8], W[1, 16], W[1, 3] = 0.5, -0.25, 0.75, 1.5
        params = InjectionParams(
            W=W,
            b=np.array([0.1, -0.2]),
            gate_w1=np.array([[0.3, -0.6], [0.8, 0.4]]),
            gate_b1=np.array([0.05, -0.1]),
            gate_w2=np.array([[1.2, -0.7], [0.2, 0.9]]),
            gate_b2=np.array([-0.3, 0.4]),
        )
        v = np.zeros(24)
        v[0], v[8], v[16], v[3] = 0.6, 0.2, 1.0, 0.4
        h = np.array([[[0.9, -1.1]]])

        out, _ = forward(params, h, v)

        hsv = [0.5 * 0.6 - 0.25 * 0.2 + 0.1, 0.75 * 1.0 + 1.5 * 0.4 - 0.2]
        hidden = [
            max(0.0, 0.3 * 0.9 - 0.6 * -1.1 + 0.05),
            max(0.0, 0.8 * 0.9 + 0.4 * -1.1 - 0.1),
        ]
        logits = [
            1.2 * hidden[0] - 0.7 * hidden[1] - 0.3,
            0.2 * hidden[0] + 0.9 * hidden[1] + 0.4,
        ]
        gate = [1.0 / (1.0 + math.exp(-x)) for x in logits]
        expected = [gate[k] * h[0, 0, k] + (1.0 - gate[k]) * hsv[k] for k in range(2)]

        np.testing.assert_allclose(out[0, 0], expected, rtol=0, atol=1e-12)

    def test_gate_open_passthrough(self):
        """A saturated open gate returns the input grid."""
        params, h, v_s, _ = random_case(0)
        params.gate_w2 = np.zeros_like(params.gate_w2)
        params.gate_b2 = np.full_like(params.gate_b2, 20.0)

        out, _ = forward(params, h, v_s)
        np.testing.assert_allclose(out, h, atol=1e-7)

        params.gate_b2 = np.full_like(params.gate_b2, 1000.0)
        out, _ = forward(params, h, v_s)
        np.testing.assert_array_equal(out, h)

    def test_gate_closed_replacement(self):
        """A saturated closed gate replaces every cell with the style projection."""
        params, h, v_s, _ = random_case(1)
        params.gate_w2 = np.zeros_like(params.gate_w2)
        params.gate_b2 = np.full_like(params.gate_b2, -1000.0)

        out, _ = forward(params, h, v_s)
        h_sv = params.W @ v_s + params.b
        np.testing.assert_array_equal(out, np.broadcast_to(h_sv, h.shape))

    def test_convex_combination(self):
        """Each output coordinate lies between h and h_sv."""
        params, _, v_s, _ = random_case(2, Z=4, G=4)
        h = np.random.default_rng(5).normal(scale=3.0, size=(25, 40, 4))  # 1000 cells

        out, cache = forward(params, h, v_s)
        low = np.minimum(h, cache.h_sv)
        high = np.maximum(h, cache.h_sv)

        assert np.all(out >= low - 1e-12)
        assert np.all(out <= high + 1e-12)
        assert np.all((cache.gate > 0) & (cache.gate < 1))

    def test_width_mismatch(self):
        """A grid whose last axis is not Z is rejected naming Z."""
        params = InjectionParams.init(Z=4)
        with pytest.raises(ShapeError) as exc_info:
            forward(params, np.zeros((2, 2, 5)), np.zeros(24))
        assert exc_info.value.dimension == "Z"

    def test_style_length_mismatch(self):
        """Style inputs must have 24 values."""
        params = InjectionParams.init(Z=4)
        with pytest.raises(ShapeError):
            forward(params, np.zeros((2, 2, 4)), np.zeros(12))


class TestBackward:
    """Tests for analytic gradients."""

    @pytest.mark.parametrize("seed", range(100))
    def test_finite_differences(self, seed: int):
        """Every gradient matches central differences."""
        params, h, v_s, upstream = random_case(seed)
        _, cache = forward(params, h, v_s)
        grads = backward(cache, upstream)

        def fn():
            return objective(params, h, v_s, upstream)

        for name in PARAM_NAMES:
            numeric = numeric_grad(fn, getattr(params, name))
            assert relative_error(grads[name], numeric) < 1e-4, name
        assert relative_error(grads["h"], numeric_grad(fn, h)) < 1e-4
        assert relative_error(grads["v_s"], numeric_grad(fn, v_s)) < 1e-4

    def test_open_gate_ignores_style(self):
        """With the gate fully open the style projection gets no gradient."""
        params, h, v_s, upstream = random_case(3)
        params.gate_w2 = np.zeros_like(params.gate_w2)
        params.gate_b2 = np.full_like(params.gate_b2, 1000.0)

        _, cache = forward(params, h, v_s)
        grads = backward(cache, upstream)

        assert not grads["W"].any()
        assert not grads["b"].any()

    def test_zero_upstream(self):
        """Zero upstream gradient gives zero gradients everywhere."""
        params, h, v_s, _ = random_case(4)
        _, cache = forward(params, h, v_s)
        grads = backward(cache, np.zeros_like(h))

        assert all(not np.any(g) for g in grads.values())

    def test_upstream_shape(self):
        """Upstream gradients must match the grid."""
        params, h, v_s, _ = random_case(5)
        _, cache = forward(params, h, v_s)
        with pytest.raises(ShapeError):
            backward(cache, np.zeros((1, 1, 4)))
