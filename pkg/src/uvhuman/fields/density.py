"""Signed distance to volume density."""

from __future__ import annotations

import math

import numpy as np

from ..numerics.tensor import Tensor, sigmoid


class DensityParams:
    """Learnable positive density scale.

    The optimizer sees the unconstrained `raw` value; the effective scale is
    softplus(raw), which keeps alpha positive throughout training.
    """

    def __init__(self, alpha=0.1):
        if not alpha > 0:
            raise ValueError(f"density scale alpha must be positive, got {alpha}")
        self.raw = math.log(math.expm1(alpha))

    @property
    def alpha(self):
        return math.log1p(math.exp(self.raw))

    @staticmethod
    def raw_to_alpha(raw):
        """Effective alpha for a raw parameter (Tensor-aware)."""
        if isinstance(raw, Tensor):
            from ..numerics.tensor import softplus
            return softplus(raw)
        return np.log1p(np.exp(raw))


def sdf_to_density(d_total, alpha):
    """sigma = (1/alpha) * sigmoid(-d_total / alpha); alpha is the effective scale."""
    if isinstance(d_total, Tensor) or isinstance(alpha, Tensor):
        if not isinstance(d_total, Tensor):
            d_total = Tensor(np.asarray(d_total))
        return sigmoid(-d_total / alpha) / alpha
    d = np.asarray(d_total, dtype=np.float64)
    a = float(alpha)
    return (1.0 / a) / (1.0 + np.exp(d / a))
