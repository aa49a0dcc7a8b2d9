"""Emission-absorption quadrature along rays.

alpha_j = 1 - exp(-sigma_j * delta_j) with delta_j = t_{j+1} - t_j and the
last interval running to `far`. The transmittance product
prod_{k<j} (1 - alpha_k) equals exp(-sum_{k<j} sigma_k delta_k) identically,
so it is computed through an exclusive cumulative sum of optical depths,
which is differentiable and has no log-of-zero hazard at high opacity.
"""

from __future__ import annotations

import numpy as np

from ..numerics.tensor import Tensor, cumsum, exp, maximum

DEPTH_EPS = 1e-8


def stratified_samples(near, far, n_samples, rng):
    """One jittered sample per uniform bin of [near, far], per ray -> (R, N)."""
    near = np.asarray(near, dtype=np.float64)[:, None]
    far = np.asarray(far, dtype=np.float64)[:, None]
    n = int(n_samples)
    u = (np.arange(n)[None, :] + rng.random((near.shape[0], n))) / n
    return near + (far - near) * u


def composite_ray(sigma, feats, t, far):
    """Composite per-sample densities/features into per-ray outputs.

    sigma (R, N) and feats (R, N, C) may be Tensors; t (R, N) and far (R,)
    are plain arrays. Returns (feature (R, C), depth (R,), opacity (R,),
    bg_weight (R,)): bg_weight is the transmittance left after the last
    sample, the weight any background model receives.
    """
    t = np.asarray(t, dtype=np.float64)
    far = np.asarray(far, dtype=np.float64)
    delta = np.concatenate([t[:, 1:] - t[:, :-1], (far - t[:, -1])[:, None]], axis=1)
    if not isinstance(sigma, Tensor):
        sigma = Tensor(np.asarray(sigma))
    if not isinstance(feats, Tensor):
        feats = Tensor(np.asarray(feats))

    od = sigma * delta                                   # optical depth per interval
    trans = exp(-cumsum(od, axis=1, exclusive=True))     # T_j, (R, N)
    alpha = 1.0 - exp(-od)
    w = trans * alpha                                    # (R, N)

    feature = (w.reshape(w.shape + (1,)) * feats).sum(axis=1)      # (R, C)
    opacity = w.sum(axis=1)
    depth = (w * t).sum(axis=1) / maximum(opacity, DEPTH_EPS)
    bg_weight = exp(-od.sum(axis=1))
    return feature, depth, opacity, bg_weight
