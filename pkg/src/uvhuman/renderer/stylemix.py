"""Global style mixer: feature image -> 4x-upsampled RGB.

Two blocks, each a bilinear 2x upsample followed by two 3x3 convolutions
with a leaky rectifier in between; the named channel widths run
C-bar -> C-bar -> 8 -> 3 (the second block's first convolution is
width-preserving) and a final sigmoid squashes to [0, 1].
"""

from __future__ import annotations

import numpy as np

from ..numerics import nn
from ..numerics.tensor import Tensor, leaky_relu, reshape, sigmoid, transpose, upsample2x

MIX_MID = 8


def init_mixer_params(cfg, seed=0):
    """Parameter dict for the two upsampling blocks, keys "mixer/..."."""
    rng = np.random.default_rng(seed)
    c = cfg.feat_channels
    params = {}
    params.update(nn.conv_params(rng, c, c, 3, "mixer/b0c0"))
    params.update(nn.conv_params(rng, c, MIX_MID, 3, "mixer/b0c1"))
    params.update(nn.conv_params(rng, MIX_MID, MIX_MID, 3, "mixer/b1c0"))
    params.update(nn.conv_params(rng, MIX_MID, 3, 3, "mixer/b1c1"))
    return params


def style_mix(params, feature):
    """(H, W, C) feature image -> (4H, 4W, 3) RGB in [0, 1]."""
    if not isinstance(feature, Tensor):
        feature = Tensor(np.asarray(feature))
    h, w, c = feature.shape
    x = reshape(transpose(feature, (2, 0, 1)), (1, c, h, w))
    x = upsample2x(x)
    x = leaky_relu(nn.conv(x, params["mixer/b0c0/w"], params["mixer/b0c0/b"], padding=1))
    x = leaky_relu(nn.conv(x, params["mixer/b0c1/w"], params["mixer/b0c1/b"], padding=1))
    x = upsample2x(x)
    x = leaky_relu(nn.conv(x, params["mixer/b1c0/w"], params["mixer/b1c0/b"], padding=1))
    x = nn.conv(x, params["mixer/b1c1/w"], params["mixer/b1c1/b"], padding=1)
    rgb = sigmoid(x)
    return transpose(reshape(rgb, (3, 4 * h, 4 * w)), (1, 2, 0))
