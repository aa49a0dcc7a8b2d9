"""Window weights that blend overlapping part boxes.

omega(x) = exp(-m (x^n + y^n + z^n)) on box-normalized coords, so the box
center weighs 1 and a box face along an axis weighs exp(-m). Defaults
n = 8, m = ln(1000) put the face weight at exactly 1e-3.
"""

from __future__ import annotations

import math

import numpy as np

DEFAULT_N = 8
DEFAULT_M = math.log(1000.0)


class WindowParams:
    def __init__(self, m=DEFAULT_M, n=DEFAULT_N):
        if not m > 0:
            raise ValueError(f"window sharpness m must be positive, got {m}")
        n = int(n)
        if n <= 0 or n % 2:
            raise ValueError(f"window exponent n must be a positive even integer, got {n}")
        self.m = float(m)
        self.n = n


def box_coords(points, box):
    """Map world points into a box's normalized frame: interior -> [-1, 1]^3."""
    lo, hi = np.asarray(box[0], dtype=np.float64), np.asarray(box[1], dtype=np.float64)
    center = 0.5 * (lo + hi)
    half = np.maximum(0.5 * (hi - lo), 1e-12)
    return (np.asarray(points, dtype=np.float64) - center) / half


def window_weight(x_local, wp=None):
    """omega in (0, 1] for box-normalized coords (..., 3)."""
    if wp is None:
        wp = WindowParams()
    x = np.asarray(x_local, dtype=np.float64)
    return np.exp(-wp.m * np.sum(x ** wp.n, axis=-1))
