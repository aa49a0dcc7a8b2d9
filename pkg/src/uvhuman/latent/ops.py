"""Sampling and per-part splicing of latent maps."""

from __future__ import annotations

import numpy as np

from ..numerics.tensor import Tensor, grid_bilinear


def sample_uv(z, u, v):
    """Bilinearly sample a (U, V, C) latent map at continuous uv (P,) -> (P, C).

    z may be a Tensor (gradients flow back to the map) or a plain array.
    """
    if isinstance(z, Tensor):
        return grid_bilinear(z, u, v)
    return grid_bilinear(Tensor(np.asarray(z)), u, v).data


def blend_parts(z_base, z_donor, mask):
    """Splice donor texels into a base latent: mask 1 takes the donor.

    mask is (U, V) and broadcasts over channels; fractional values blend.
    """
    z_base = np.asarray(z_base)
    z_donor = np.asarray(z_donor)
    if z_base.shape != z_donor.shape:
        raise ValueError(f"latent shapes differ: {z_base.shape} vs {z_donor.shape}")
    m = np.asarray(mask, dtype=z_base.dtype)
    if m.shape != z_base.shape[:2]:
        raise ValueError(f"mask shape {m.shape} does not match latent grid {z_base.shape[:2]}")
    m = m[:, :, None]
    return (1.0 - m) * z_base + m * z_donor
