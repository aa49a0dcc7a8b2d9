"""Adam with bias correction, over named parameter dicts."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Adam:
    """Standard Adam. Keeps one (m, v, t) triple per parameter name.

    ``step`` only touches parameters that appear in the supplied gradient
    dict, so sparsely trained parameters (per-identity latents) keep correct
    bias correction: their step counter advances only when they are updated.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.t = {k: 0 for k in self.params}

    def step(self, grads):
        """Apply one update from a {name: gradient array} dict."""
        for name, g in grads.items():
            p = self.params[name]
            if g.shape != p.data.shape:
                raise ValueError(
                    f"adam: gradient shape {g.shape} does not match "
                    f"parameter '{name}' shape {p.data.shape}")
            g = g.astype(p.data.dtype, copy=False)
            self.t[name] += 1
            t = self.t[name]
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
