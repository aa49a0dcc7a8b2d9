"""8-bit PNG and 32-bit float PFM image files."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image


def to_uint8(img):
    """Float image in [0, 1] -> uint8 with round-half-away quantization."""
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def save_png(path, img):
    """Write an (H, W, 3) float [0,1] or uint8 array as PNG."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(arr, mode="RGB" if arr.ndim == 3 else "L").save(path, format="PNG")


def load_png(path):
    """Read a PNG as float (H, W, 3) in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def write_pfm(path, data):
    """Write (H, W) or (H, W, 3) float32 data as a little-endian PFM."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM data must be (H, W) or (H, W, 3), got {arr.shape}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")                      # negative scale = little endian
        f.write(arr[::-1].astype("<f4").tobytes())   # rows bottom-to-top


def read_pfm(path):
    """Read a PFM file back into float32 (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic not in (b"PF", b"Pf"):
            raise ValueError(f"{path}: not a PFM file (bad magic {magic!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        count = w * h * (3 if magic == b"PF" else 1)
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(count * 4), dtype=dtype, count=count)
    shape = (h, w, 3) if magic == b"PF" else (h, w)
    return np.ascontiguousarray(data.reshape(shape)[::-1]).astype(np.float32)
