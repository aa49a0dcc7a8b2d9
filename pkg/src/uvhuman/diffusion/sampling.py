"""Diffusion training loss, DDIM sampling, Diff-Render, and part-aware refine.

Two timestep regimes share one update rule: unconditional generation
(ddim_sample) spreads S steps across the whole schedule, while Diff-Render
and interpolation add only mild noise (S consecutive steps from the
schedule's start) so the input latent's content survives the round trip.
"""

from __future__ import annotations

import numpy as np

from ..numerics.tensor import Tensor
from .schedule import forward_noise


def diffusion_loss(denoise_fn, schedule, z0, rng, t=None, eps=None):
    """Noise-prediction loss: mean over the batch of per-sample sum-squared error.

    z0 is an (N, U, V, C) batch of normalized latents; t and eps may be
    pinned by tests (t uniform on {1..T}, eps unit Gaussian otherwise).
    """
    z0 = np.asarray(z0, dtype=np.float64)
    n = z0.shape[0]
    if t is None:
        t = rng.integers(1, schedule.timesteps + 1, size=n)
    if eps is None:
        eps = rng.standard_normal(z0.shape)
    a = schedule.a_bar(t).reshape(n, 1, 1, 1)
    z_t = np.sqrt(a) * z0 + np.sqrt(1.0 - a) * eps
    pred = denoise_fn(z_t, t)
    if not isinstance(pred, Tensor):
        pred = Tensor(np.asarray(pred))
    diff = pred - eps
    return (diff ** 2).reshape(n, -1).sum(axis=1).mean()


def _ddim_sigma(eta, a_t, a_s):
    return eta * np.sqrt((1.0 - a_s) / (1.0 - a_t)) * np.sqrt(1.0 - a_t / a_s)


def _ddim_step(x, eps_hat, a_t, a_s, eta, rng, refine=None):
    """One x_t -> x_s update; refine (if given) adjusts the x0 estimate."""
    x0 = (x - np.sqrt(1.0 - a_t) * eps_hat) / np.sqrt(a_t)
    if refine is not None:
        x0 = refine(x0)
    sigma = _ddim_sigma(eta, a_t, a_s)
    dir_coeff = np.sqrt(max(1.0 - a_s - sigma ** 2, 0.0))
    out = np.sqrt(a_s) * x0 + dir_coeff * eps_hat
    if sigma > 0:
        out = out + sigma * rng.standard_normal(x.shape)
    return out


def generation_times(schedule, steps):
    """Decreasing timestep pairs (t, s) spanning the full schedule."""
    grid = np.unique(np.round(np.linspace(0, schedule.timesteps, steps + 1)
                              ).astype(int))
    return [(int(grid[i]), int(grid[i - 1])) for i in range(len(grid) - 1, 0, -1)]


def ddim_sample(denoise_fn, schedule, n, shape, steps=100, eta=0.0, seed=0,
                stats=None):
    """Draw n latents by DDIM; deterministic when eta = 0 for a fixed seed.

    Returns (n, U, V, C) latents, denormalized through `stats` when given.
    """
    if not 1 <= steps <= schedule.timesteps:
        raise ValueError(f"steps must lie in [1, {schedule.timesteps}], got {steps}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n,) + tuple(shape))
    for t, s in generation_times(schedule, steps):
        eps_hat = denoise_fn(x, t)
        eps_hat = np.asarray(eps_hat.data if isinstance(eps_hat, Tensor) else eps_hat)
        x = _ddim_step(x, eps_hat, schedule.a_bar(t), schedule.a_bar(s), eta, rng)
    if stats is not None:
        x = np.stack([stats.denormalize(xi) for xi in x]).astype(np.float64)
    return x


def part_refine(x0_bar, y0, mask, lam=0.5):
    """Texelwise fusion of an x0 estimate with a protected reference.

    Minimizes ||x - x0_bar||^2 + lam ||(1-M)(x - y0)||^2 per texel:
    x = (x0_bar + lam (1-M)^2 y0) / (1 + lam (1-M)^2). mask entries must be
    0 (protected: pulled to y0) or 1 (editable: passthrough); a (U, V) mask
    broadcasts over channels.
    """
    x0_bar = np.asarray(x0_bar, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if not np.all((m == 0.0) | (m == 1.0)):
        raise ValueError("part mask must be texelwise 0/1")
    if m.ndim == x0_bar.ndim - 1:
        m = m[..., None]
    w = lam * (1.0 - m) ** 2
    return (x0_bar + w * y0) / (1.0 + w)


def diff_render(denoise_fn, schedule, z, steps=30, eta=0.0, seed=0,
                mask=None, y0=None, lam=0.5, stats=None):
    """Noise a latent `steps` schedule-steps forward, then DDIM back.

    steps = 0 returns the input unchanged. When a mask is given, every
    intermediate x0 estimate is part-refined against reference y0 (both in
    normalized space). Returns a denormalized latent.
    """
    z = np.asarray(z, dtype=np.float64)
    if steps == 0:
        return z.copy()
    if not 0 <= steps <= schedule.timesteps:
        raise ValueError(f"steps must lie in [0, {schedule.timesteps}], got {steps}")
    rng = np.random.default_rng(seed)
    zn = stats.normalize(z).astype(np.float64) if stats is not None else z
    y0n = None
    if mask is not None:
        if y0 is None:
            raise ValueError("part-aware refinement needs a reference latent y0")
        y0n = stats.normalize(y0).astype(np.float64) if stats is not None \
            else np.asarray(y0, dtype=np.float64)
    refine = (lambda x0: part_refine(x0, y0n, mask, lam)) if mask is not None else None

    x = forward_noise(schedule, zn, steps, rng.standard_normal(zn.shape))
    for t in range(steps, 0, -1):
        eps_hat = denoise_fn(x, t)
        eps_hat = np.asarray(eps_hat.data if isinstance(eps_hat, Tensor) else eps_hat)
        x = _ddim_step(x, eps_hat, schedule.a_bar(t), schedule.a_bar(t - 1),
                       eta, rng, refine)
    return stats.denormalize(x).astype(np.float64) if stats is not None else x


def slerp(a, b, frac):
    """Spherical interpolation between two equally-shaped arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return (1.0 - frac) * a + frac * b
    cos = np.clip(np.dot(a.ravel(), b.ravel()) / (na * nb), -1.0, 1.0)
    omega = np.arccos(cos)
    if omega < 1e-8:
        return (1.0 - frac) * a + frac * b
    return (np.sin((1.0 - frac) * omega) * a + np.sin(frac * omega) * b) / np.sin(omega)


def interpolate(denoise_fn, schedule, z_a, z_b, frac, steps=30, seed=0, stats=None):
    """Shared-noise spherical interpolation at step S, then DDIM back down."""
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    if steps == 0:
        mix = slerp(z_a, z_b, frac)
        return mix
    rng = np.random.default_rng(seed)
    an = stats.normalize(z_a).astype(np.float64) if stats is not None else z_a
    bn = stats.normalize(z_b).astype(np.float64) if stats is not None else z_b
    eps = rng.standard_normal(an.shape)
    xa = forward_noise(schedule, an, steps, eps)
    xb = forward_noise(schedule, bn, steps, eps)
    x = slerp(xa, xb, frac)
    for t in range(steps, 0, -1):
        eps_hat = denoise_fn(x, t)
        eps_hat = np.asarray(eps_hat.data if isinstance(eps_hat, Tensor) else eps_hat)
        x = _ddim_step(x, eps_hat, schedule.a_bar(t), schedule.a_bar(t - 1),
                       0.0, rng)
    return stats.denormalize(x).astype(np.float64) if stats is not None else x
