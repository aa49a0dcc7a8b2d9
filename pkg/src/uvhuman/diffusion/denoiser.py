"""Convolutional noise predictor over structured latents."""

from __future__ import annotations

import numpy as np

from ..numerics import nn
from ..numerics.tensor import Tensor, leaky_relu, transpose


class DenoiserConfig:
    """Desk-scale default: 2 residual blocks at base width 32.

    The production-scale variant (4 blocks, 128 channels) is the same code
    with different numbers.
    """

    def __init__(self, blocks=2, base=32, emb_dim=32):
        self.blocks = int(blocks)
        self.base = int(base)
        self.emb_dim = int(emb_dim)
        if self.emb_dim % 2:
            raise ValueError("timestep embedding dimension must be even")


def timestep_embedding(t, dim):
    """Sinusoidal embedding of integer timesteps -> (N, dim) float array."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def init_denoiser(channels, cfg=None, seed=0):
    """Parameter dict, keys "den/..."."""
    cfg = cfg or DenoiserConfig()
    rng = np.random.default_rng(seed)
    params = {}
    params.update(nn.conv_params(rng, channels, cfg.base, 3, "den/stem"))
    for b in range(cfg.blocks):
        params.update(nn.conv_params(rng, cfg.base, cfg.base, 3, f"den/b{b}/c0"))
        params.update(nn.conv_params(rng, cfg.base, cfg.base, 3, f"den/b{b}/c1"))
        params[f"den/b{b}/emb/w"] = nn.he_uniform(rng, cfg.emb_dim,
                                                  (cfg.emb_dim, cfg.base))
        params[f"den/b{b}/emb/b"] = nn.zeros((cfg.base,))
    params.update(nn.conv_params(rng, cfg.base, channels, 3, "den/out"))
    return params


def denoise(params, z_t, t, cfg=None):
    """Predict the noise in z_t (N, U, V, C) or (U, V, C) at timestep(s) t.

    Output shape always equals the input shape.
    """
    cfg = cfg or DenoiserConfig()
    single = False
    if not isinstance(z_t, Tensor):
        z_t = Tensor(np.asarray(z_t))
    if z_t.ndim == 3:
        single = True
        z_t = z_t.reshape((1,) + z_t.shape)
    n, u, v, c = z_t.shape
    x = transpose(z_t, (0, 3, 1, 2))                     # NCHW

    emb = Tensor(timestep_embedding(np.broadcast_to(np.asarray(t), (n,)),
                                    cfg.emb_dim))
    x = leaky_relu(nn.conv(x, params["den/stem/w"], params["den/stem/b"], padding=1))
    for b in range(cfg.blocks):
        h = leaky_relu(nn.conv(x, params[f"den/b{b}/c0/w"],
                               params[f"den/b{b}/c0/b"], padding=1))
        te = emb @ params[f"den/b{b}/emb/w"] + params[f"den/b{b}/emb/b"]
        h = h + te.reshape(n, cfg.base, 1, 1)
        h = leaky_relu(nn.conv(h, params[f"den/b{b}/c1/w"],
                               params[f"den/b{b}/c1/b"], padding=1))
        x = x + h
    out = nn.conv(x, params["den/out/w"], params["den/out/b"], padding=1)
    out = transpose(out, (0, 2, 3, 1))
    return out[0] if single else out
