"""Latent bank normalization statistics.

The default mode is structure-aligned ("texel"): every texel/channel gets
its own mean and standard deviation across the bank, so the diffusion model
sees a unit-scale signal everywhere on the atlas. The other modes exist for
the normalization ablation:

  none      identity transform
  standard  one global scalar mean/std
  part      scalar mean/std per part chart (plus one bucket for texels
            outside every chart)
  texel     per-texel, per-channel (structure-aligned; default)

Statistics use the population variance (ddof 0), computed in float64.
"""

from __future__ import annotations

import numpy as np

from ..numerics import load_arrays, save_arrays
from .masks import chart_label_map

MODES = ("none", "standard", "part", "texel")
EPS_STD = 1e-6


class NormStats:
    """Affine per-texel transform fitted to a latent bank.

    mean/std are stored dense (U, V, C) regardless of mode so that
    normalize/denormalize and serialization are uniform.
    """

    def __init__(self, mean, std, mode="texel"):
        if mode not in MODES:
            raise ValueError(f"unknown normalization mode '{mode}'; expected one of {MODES}")
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 3:
            raise ValueError(f"mean/std must share a (U, V, C) shape, got {self.mean.shape} / {self.std.shape}")
        self.mode = mode

    @staticmethod
    def compute(stack, mode="texel"):
        stack = np.asarray(stack, dtype=np.float64)
        if stack.ndim != 4:
            raise ValueError(f"bank stack must be (N, U, V, C), got {stack.shape}")
        u, v, c = stack.shape[1:]
        if mode == "none":
            return NormStats(np.zeros((u, v, c)), np.ones((u, v, c)), mode)
        if mode == "standard":
            mu = np.full((u, v, c), stack.mean())
            sd = np.full((u, v, c), stack.std(ddof=0))
        elif mode == "part":
            label = chart_label_map(u, v)
            mu = np.zeros((u, v, c))
            sd = np.ones((u, v, c))
            for part in np.unique(label):
                sel = stack[:, label == part, :]
                mu[label == part] = sel.mean()
                sd[label == part] = sel.std(ddof=0)
        elif mode == "texel":
            mu = stack.mean(axis=0)
            sd = stack.std(axis=0, ddof=0)
        else:
            raise ValueError(f"unknown normalization mode '{mode}'; expected one of {MODES}")
        return NormStats(mu, sd, mode)

    def _sigma(self):
        return np.maximum(self.std, EPS_STD)

    def normalize(self, z):
        return ((np.asarray(z, dtype=np.float64) - self.mean) / self._sigma()).astype(np.float32)

    def denormalize(self, z):
        return (np.asarray(z, dtype=np.float64) * self._sigma() + self.mean).astype(np.float32)

    def save(self, path):
        save_arrays(path, {
            "norm/mu": self.mean.astype(np.float32),
            "norm/sigma": self.std.astype(np.float32),
            "norm/mode": np.full(1, float(MODES.index(self.mode)), dtype=np.float32),
        })

    @staticmethod
    def load(path):
        arrays = load_arrays(path)
        mode = MODES[int(arrays["norm/mode"][0])]
        return NormStats(arrays["norm/mu"], arrays["norm/sigma"], mode)
