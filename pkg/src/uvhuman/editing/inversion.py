"""Decoder-frozen latent inversion from posed multi-view images.

Only the latent map moves: the field/mixer/density parameters are treated as
constants, so gradients are requested for the latent leaf alone and no
optimizer state exists for the network. Target views reuse the training
module's cached-geometry loss path.
"""

from __future__ import annotations

import numpy as np

from ..body import build_body
from ..body.humanoid import ShapeParams
from ..numerics.adam import Adam
from ..numerics.tensor import Tensor, grad
from ..renderer import frame_geometry
from ..training.autodecoder import FrameContext
from ..training.autodecoder import frame_losses as _frame_losses
from ..training.losses import LossWeights, PerceptualProxy, downsample_area

DIVERGE_FACTOR = 10.0


class InversionDiverged(RuntimeError):
    """Loss blew past 10x its initial value; carries the loss log so far."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class InversionConfig:
    """Budget and loss setup for inversion.

    feature_res None derives the render resolution from the target images
    (mixer upsamples 4x, so targets must be 4 * feature_res on a side).
    Weights default to the reconstruction suite with the surface term off;
    the decoder is frozen, so the adversarial weight must stay zero.
    """

    def __init__(self, steps=3000, lr=1e-2, weights=None, feature_res=None,
                 n_samples=24, seed=0, log_every=1):
        self.steps = int(steps)
        self.lr = float(lr)
        self.weights = weights or LossWeights(eik=0.0)
        self.feature_res = None if feature_res is None else int(feature_res)
        self.n_samples = int(n_samples)
        self.seed = int(seed)
        self.log_every = int(log_every)
        if self.steps < 0:
            raise ValueError(f"step budget must be >= 0, got {steps}")
        if self.weights.adv > 0:
            raise ValueError("adversarial weight must be 0 when inverting "
                             "(the decoder is frozen)")


def bank_mean(bank):
    """Mean latent map of a bank (or of a raw (N, U, V, C) stack)."""
    stack = bank if isinstance(bank, np.ndarray) else bank.stack()
    return np.mean(stack, axis=0, dtype=np.float64).astype(np.float32)


def invert(images, poses, cameras, params, field_cfg, bank, cfg=None,
           body=None, wp=None, quiet=True):
    """Recover a latent that reproduces the target views -> (z, history).

    images is a list/array of (H, W, 3) floats in [0, 1]; poses and cameras
    align with it. params is a trained (frozen) decoder; bank supplies the
    initialization mean and latent shape. Optimizes the latent alone with
    Adam, logging every step; aborts with InversionDiverged if the loss
    exceeds 10x its initial value. A zero-step budget returns the mean.
    """
    images = [np.asarray(im, dtype=np.float64) for im in images]
    if not (len(images) == len(poses) == len(cameras)) or not images:
        raise ValueError("need >= 1 target view with matching poses/cameras, "
                         f"got {len(images)}/{len(poses)}/{len(cameras)}")
    cfg = cfg or InversionConfig()
    res = cfg.feature_res
    if res is None:
        if images[0].shape[0] % 4:
            raise ValueError(f"target height {images[0].shape[0]} is not a "
                             "multiple of the 4x mixer factor")
        res = images[0].shape[0] // 4
    body = body or build_body(ShapeParams())

    frames = []
    for i, (im, pose, cam) in enumerate(zip(images, poses, cameras)):
        geom = frame_geometry(body, pose, cam.resize(res, res), cfg.n_samples,
                              seed=cfg.seed * 100003 + i, wp=wp)
        frames.append(FrameContext(None, body, geom, im,
                                   downsample_area(im, res, res)))

    z0 = bank_mean(bank)
    if cfg.steps == 0:
        return z0, []
    z = Tensor(z0.astype(np.float64), requires_grad=True)
    adam = Adam({"z": z}, lr=cfg.lr)
    proxy = PerceptualProxy(seed=cfg.seed + 3) if cfg.weights.perc > 0 else None

    history = []
    initial = None
    for step in range(cfg.steps):
        fc = frames[step % len(frames)]
        rng = np.random.default_rng([cfg.seed, step])
        terms, total, _ = _frame_losses(params, field_cfg, fc, z, cfg.weights,
                                        proxy, rng, eik_points=0)
        tval = float(total.data)
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            history.append({"step": step, "total": tval, **{
                k: float(np.mean(t.data)) for k, t in terms.items()}})
        if initial is None:
            initial = tval
        if not np.isfinite(tval) or tval > DIVERGE_FACTOR * initial:
            raise InversionDiverged(
                f"inversion loss {tval:.4g} exceeded {DIVERGE_FACTOR:g}x the "
                f"initial {initial:.4g} at step {step}", history)
        (gz,) = grad(total, [z])
        adam.step({"z": gz})
        if not quiet and step % 100 == 0:
            print(f"invert step {step}: total {tval:.5f}")
    return z.data.astype(np.float32), history
