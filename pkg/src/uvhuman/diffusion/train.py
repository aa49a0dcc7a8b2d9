"""Training loop for the latent noise predictor, plus model persistence."""

from __future__ import annotations

import numpy as np

from ..latent.normstats import MODES, NormStats
from ..numerics import load_arrays, save_arrays
from ..numerics.adam import Adam
from ..numerics.tensor import Tensor, grad
from .denoiser import DenoiserConfig, denoise, init_denoiser
from .sampling import diffusion_loss
from .schedule import NoiseSchedule


def train_diffusion(stack, schedule=None, cfg=None, mode="texel", steps=2000,
                    lr=2e-3, batch=8, seed=0, log_every=100, quiet=True):
    """Fit the denoiser to a bank of raw latents.

    stack is (N, U, V, C); latents are normalized with the requested mode
    before training (the Tab.-2-style ablation swaps this mode). Returns
    (params, stats, schedule, history).
    """
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 4 or stack.shape[0] < 1:
        raise ValueError(f"need a nonempty (N, U, V, C) latent stack, got {stack.shape}")
    schedule = schedule or NoiseSchedule()
    cfg = cfg or DenoiserConfig()
    stats = NormStats.compute(stack, mode)
    zn = np.stack([stats.normalize(z) for z in stack]).astype(np.float64)

    params = init_denoiser(stack.shape[3], cfg, seed=seed)
    opt = Adam(params, lr=lr)
    keys = list(params)
    tensors = [params[k] for k in keys]
    rng = np.random.default_rng(seed)
    history = []
    for step in range(steps):
        idx = rng.integers(0, zn.shape[0], size=min(batch, zn.shape[0]))
        loss = diffusion_loss(lambda z_t, t: denoise(params, z_t, t, cfg),
                              schedule, zn[idx], rng)
        if not np.isfinite(loss.data):
            raise RuntimeError(f"diffusion loss became non-finite at step {step}")
        gs = grad(loss, tensors)
        opt.step({k: g for k, g in zip(keys, gs)})
        if step % log_every == 0 or step == steps - 1:
            history.append({"step": step, "loss": float(loss.data)})
            if not quiet:
                print(f"diff step {step}: {float(loss.data):.2f}")
    return params, stats, schedule, history


def save_diffusion(path, params, stats, schedule, cfg):
    """Write denoiser params + normalization + schedule into one container."""
    arrays = {k: np.asarray(p.data, dtype=np.float32) for k, p in params.items()}
    arrays["norm/mu"] = stats.mean.astype(np.float32)
    arrays["norm/sigma"] = stats.std.astype(np.float32)
    arrays["norm/mode"] = np.full(1, float(MODES.index(stats.mode)), np.float32)
    arrays["meta/schedule"] = np.asarray(
        [schedule.timesteps, schedule.beta[0], schedule.beta[-1]], np.float64)
    arrays["meta/denoiser"] = np.asarray(
        [cfg.blocks, cfg.base, cfg.emb_dim], np.float64)
    save_arrays(path, arrays)


def load_diffusion(path):
    """Read a saved model -> (params, stats, schedule, cfg)."""
    arrays = load_arrays(path)
    if "meta/schedule" not in arrays or "meta/denoiser" not in arrays:
        raise ValueError(f"{path}: not a diffusion model container")
    ts, b0, b1 = arrays["meta/schedule"]
    schedule = NoiseSchedule(int(ts), float(b0), float(b1))
    blocks, base, emb = (int(x) for x in arrays["meta/denoiser"])
    cfg = DenoiserConfig(blocks=blocks, base=base, emb_dim=emb)
    stats = NormStats(arrays["norm/mu"], arrays["norm/sigma"],
                      MODES[int(arrays["norm/mode"][0])])
    params = {k: Tensor(a, requires_grad=True, dtype=a.dtype)
              for k, a in arrays.items()
              if not k.startswith(("norm/", "meta/"))}
    return params, stats, schedule, cfg
