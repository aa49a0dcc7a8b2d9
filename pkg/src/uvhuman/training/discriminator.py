"""Single-scale patch discriminator over full-resolution RGB."""

from __future__ import annotations

import numpy as np

from ..numerics import nn
from ..numerics.tensor import Tensor, leaky_relu, transpose


def init_discriminator(seed=0, widths=(16, 32)):
    """Strided conv stack ending in a 1-channel patch logit map."""
    rng = np.random.default_rng(seed)
    params = {}
    c_in = 3
    for i, c in enumerate(widths):
        params.update(nn.conv_params(rng, c_in, c, 4, f"disc/c{i}"))
        c_in = c
    params.update(nn.conv_params(rng, c_in, 1, 3, "disc/out"))
    return params


def discriminate(params, img):
    """(H, W, 3) image -> patch logit map (1, 1, H/4, W/4)."""
    if not isinstance(img, Tensor):
        img = Tensor(np.asarray(img))
    h, w, c = img.shape
    x = transpose(img, (2, 0, 1)).reshape(1, c, h, w)
    i = 0
    while f"disc/c{i}/w" in params:
        x = leaky_relu(nn.conv(x, params[f"disc/c{i}/w"], params[f"disc/c{i}/b"],
                               stride=2, padding=1))
        i += 1
    return nn.conv(x, params["disc/out/w"], params["disc/out/b"], padding=1)
