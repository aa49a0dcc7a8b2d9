"""Array-container serialization round trips."""

import numpy as np
import pytest

from uvhuman.numerics.checkpoint import MAGIC, load_arrays, save_arrays


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {
        "a/w": rng.standard_normal((4, 3)).astype(np.float32),
        "a/b": rng.standard_normal(3).astype(np.float32),
        "meta": np.array([2.0, 0.5], dtype=np.float32),
    }
    p = tmp_path / "ck.sldm"
    save_arrays(str(p), arrays)
    back = load_arrays(str(p))
    assert set(back) == set(arrays)
    for k, v in arrays.items():
        assert back[k].dtype == v.dtype
        assert back[k].shape == v.shape
        np.testing.assert_array_equal(back[k], v)


def test_container_stores_float32_only(tmp_path):
    """The on-disk format is float32; other dtypes are cast on save."""
    p = tmp_path / "ck.sldm"
    save_arrays(str(p), {"idx": np.arange(7, dtype=np.int64),
                         "m": np.array([2.0, 0.5], dtype=np.float64)})
    back = load_arrays(str(p))
    assert back["idx"].dtype == np.float32
    np.testing.assert_array_equal(back["idx"], np.arange(7, dtype=np.float32))
    np.testing.assert_array_equal(back["m"], np.array([2.0, 0.5], np.float32))


def test_magic_header_written(tmp_path):
    p = tmp_path / "ck.sldm"
    save_arrays(str(p), {"x": np.zeros(1, dtype=np.float32)})
    with open(p, "rb") as f:
        assert f.read(len(MAGIC)) == MAGIC


def test_corrupt_magic_rejected(tmp_path):
    p = tmp_path / "ck.sldm"
    save_arrays(str(p), {"x": np.zeros(1, dtype=np.float32)})
    raw = bytearray(p.read_bytes())
    raw[0] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        load_arrays(str(p))


def test_zero_size_and_empty_dict(tmp_path):
    p = tmp_path / "ck.sldm"
    save_arrays(str(p), {"empty": np.zeros((0, 3), dtype=np.float32)})
    back = load_arrays(str(p))
    assert back["empty"].shape == (0, 3)
