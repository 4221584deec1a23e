"""Adam optimizer over named numpy parameters."""

import numpy as np


class Adam:
    """Adam with bias-corrected moment estimates, updating parameters in place."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """
        Apply one update.

        Args:
            params: Parameter arrays, modified in place
            grads: Gradients keyed like `params`
        """
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t

        # Sorted keys fix the update order
        for name in sorted(params):
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])

            self.m[name] *= self.beta1
            self.m[name] += (1.0 - self.beta1) * g
            self.v[name] *= self.beta2
            self.v[name] += (1.0 - self.beta2) * (g * g)

            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
