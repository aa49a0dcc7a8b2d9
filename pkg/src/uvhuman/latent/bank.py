"""Per-identity structured latents and the bank that holds them."""

from __future__ import annotations

import numpy as np

from ..numerics import load_arrays, save_arrays


class StructuredLatent:
    """One identity's latent map, a (U, V, C) float32 array on the UV atlas.

    Rows index u, columns index v; texel (i, j) covers
    [i/U, (i+1)/U) x [j/V, (j+1)/V).
    """

    def __init__(self, data, ident=None):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError(f"latent map must be (U, V, C), got {data.shape}")
        self.data = data
        self.ident = ident

    @property
    def shape(self):
        return self.data.shape

    @staticmethod
    def random(shape, scale=0.01, seed=0, ident=None):
        rng = np.random.default_rng(seed)
        return StructuredLatent(rng.normal(0.0, scale, shape).astype(np.float32), ident)


class LatentBank:
    """Ordered map identity -> latent array, all sharing one (U, V, C) shape."""

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)
        if len(self.shape) != 3:
            raise ValueError(f"bank shape must be (U, V, C), got {shape}")
        self._latents = {}

    def __len__(self):
        return len(self._latents)

    def __contains__(self, ident):
        return str(ident) in self._latents

    def ids(self):
        return list(self._latents.keys())

    def add(self, ident, data):
        data = np.asarray(data, dtype=np.float32)
        if data.shape != self.shape:
            raise ValueError(f"latent shape {data.shape} does not match bank shape {self.shape}")
        self._latents[str(ident)] = data

    def get(self, ident):
        key = str(ident)
        if key not in self._latents:
            raise KeyError(f"unknown identity '{ident}'; bank has {self.ids()}")
        return self._latents[key]

    def stack(self):
        """All latents as one (N, U, V, C) array, in insertion order."""
        if not self._latents:
            raise ValueError("latent bank is empty")
        return np.stack(list(self._latents.values()))

    @staticmethod
    def random(ids, shape, scale=0.01, seed=0):
        bank = LatentBank(shape)
        rng = np.random.default_rng(seed)
        for ident in ids:
            bank.add(ident, rng.normal(0.0, scale, shape).astype(np.float32))
        return bank

    def save(self, path):
        arrays = {"bank/shape": np.asarray(self.shape, dtype=np.float32)}
        for ident, z in self._latents.items():
            arrays[f"latent/{ident}"] = z
        save_arrays(path, arrays)

    @staticmethod
    def load(path):
        arrays = load_arrays(path)
        if "bank/shape" not in arrays:
            raise ValueError(f"{path}: not a latent bank file (missing bank/shape)")
        bank = LatentBank(tuple(int(s) for s in arrays["bank/shape"]))
        for key in arrays:
            if key.startswith("latent/"):
                bank.add(key[len("latent/"):], arrays[key])
        return bank
