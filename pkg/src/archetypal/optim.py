"""Adam optimizer over named parameter arrays."""

from __future__ import annotations

import numpy as np


class AdamOptimizer:
    """Adam with bias correction over a dict of named float64 arrays.

    Parameters are updated in place on :meth:`step`; each parameter carries
    its own first/second moment estimates and all share one step counter.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self._m = {k: np.zeros_like(v) for k, v in params.items()}
        self._v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        """Apply one update from per-parameter gradients.

        Raises
        ------
        KeyError, ValueError
            On unknown parameter names or mismatched gradient shapes.
        """
        for name in grads:
            if name not in self.params:
                raise KeyError(f"gradient for unknown parameter {name!r}")
            if grads[name].shape != self.params[name].shape:
                raise ValueError(
                    f"gradient shape {grads[name].shape} does not match "
                    f"parameter {name!r} shape {self.params[name].shape}"
                )
        self.step_count += 1
        t = self.step_count
        correct1 = 1.0 - self.beta1 ** t
        correct2 = 1.0 - self.beta2 ** t
        for name, g in grads.items():
            m = self._m[name] = self.beta1 * self._m[name] + (1.0 - self.beta1) * g
            v = self._v[name] = self.beta2 * self._v[name] + (1.0 - self.beta2) * (g * g)
            m_hat = m / correct1
            v_hat = v / correct2
            self.params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
