"""Forward-noising schedule for latent diffusion."""

from __future__ import annotations

import numpy as np


class NoiseSchedule:
    """Linear-beta schedule with cached cumulative products.

    beta[t-1] is the variance added at step t (t runs 1..T); alpha_bar[t-1]
    is the cumulative signal fraction after t steps. alpha_bar(0) = 1 by
    convention (no noise).
    """

    def __init__(self, timesteps=1000, beta_start=1e-4, beta_end=2e-2):
        t = int(timesteps)
        if t < 1:
            raise ValueError(f"schedule needs >= 1 step, got {t}")
        self.timesteps = t
        self.beta = np.linspace(beta_start, beta_end, t)
        if not (0.0 < self.beta[0] and self.beta[-1] < 1.0):
            raise ValueError("betas must lie in (0, 1)")
        self.alpha = 1.0 - self.beta
        self.alpha_bar = np.cumprod(self.alpha)

    def a_bar(self, t):
        """alpha_bar at integer step(s) t in 0..T; t = 0 means identity."""
        t = np.asarray(t)
        out = np.where(t > 0, self.alpha_bar[np.maximum(t, 1) - 1], 1.0)
        return out if out.ndim else float(out)


def forward_noise(schedule, z0, t, eps):
    """z_t = sqrt(a_bar) z0 + sqrt(1 - a_bar) eps, elementwise."""
    a = schedule.a_bar(t)
    return np.sqrt(a) * np.asarray(z0) + np.sqrt(1.0 - a) * np.asarray(eps)
