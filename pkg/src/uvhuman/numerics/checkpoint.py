"""Binary parameter container.

Layout (little-endian throughout):

    magic "SLDM" | version u8 | records...

    record := name_len u32 | name utf-8 | rank u32 | extents u32 * rank
              | data f32 * prod(extents)

Values are stored as float32 regardless of the in-memory training dtype.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SLDM"
VERSION = 1


def save_arrays(path, arrays):
    """Write a {name: array} dict. Insertion order is preserved on disk."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<B", VERSION))
        for name, arr in arrays.items():
            arr = np.asarray(arr, dtype="<f4")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_arrays(path):
    """Read a container back into a {name: float32 array} dict."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}, not a parameter container")
    version = blob[4]
    if version != VERSION:
        raise ValueError(f"{path}: unsupported container version {version}")
    out = {}
    pos = 5
    n = len(blob)
    while pos < n:
        (name_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        shape = struct.unpack_from(f"<{rank}I", blob, pos)
        pos += 4 * rank
        count = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=pos).reshape(shape)
        pos += 4 * count
        out[name] = arr.copy()
    if pos != n:
        raise ValueError(f"{path}: trailing bytes after last record")
    return out
