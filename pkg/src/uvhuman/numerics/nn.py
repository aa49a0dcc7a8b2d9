"""Parameter initializers and tiny layer helpers shared by the networks."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor


def he_uniform(rng, fan_in, shape, dtype=None):
    bound = np.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, dtype=dtype)


def zeros(shape, dtype=None):
    return Tensor(np.zeros(shape), requires_grad=True, dtype=dtype)


def siren_first(rng, fan_in, fan_out, dtype=None):
    """First-layer SIREN weight, U(-1/n, 1/n); the frequency scale is applied outside."""
    w = rng.uniform(-1.0 / fan_in, 1.0 / fan_in, size=(fan_in, fan_out))
    return Tensor(w, requires_grad=True, dtype=dtype)


def siren_hidden(rng, fan_in, fan_out, dtype=None):
    w = rng.uniform(-np.sqrt(6.0 / fan_in), np.sqrt(6.0 / fan_in), size=(fan_in, fan_out))
    return Tensor(w, requires_grad=True, dtype=dtype)


def linear(x, w, b=None):
    """x (N, in) @ w (in, out) + b."""
    y = T.matmul(x, w)
    if b is not None:
        y = T.add(y, b)
    return y


def conv(x, w, b=None, stride=1, padding=0):
    """NCHW convolution with optional per-channel bias."""
    y = T.conv2d(x, w, stride=stride, padding=padding)
    if b is not None:
        y = T.add(y, T.reshape(b, (1, -1, 1, 1)))
    return y


def conv_params(rng, c_in, c_out, k, prefix, dtype=None):
    """He-initialized (weight, bias) pair for a k x k convolution."""
    fan_in = c_in * k * k
    w = he_uniform(rng, fan_in, (c_out, c_in, k, k), dtype=dtype)
    b = zeros((c_out,), dtype=dtype)
    return {f"{prefix}/w": w, f"{prefix}/b": b}
