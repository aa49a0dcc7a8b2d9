"""Timing comparison of the compiled geometry kernels vs the numpy fallback.

Run as `python3 benchmarks/kernels.py`. Both backends are called on the same
inputs; outputs are checked for agreement before timing so the numbers mean
something.
"""

from __future__ import annotations

import time

import numpy as np

from uvhuman._kernels import BACKEND, _ref
from uvhuman.body import ShapeParams, SkeletonPose, build_body, ring_camera
from uvhuman.dataio import make_identity, posed_capsules

try:
    from uvhuman._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_nearest_triangles(n_points=20000, seed=0):
    body = build_body(ShapeParams())
    rng = np.random.default_rng(seed)
    lo = body.vertices.min(axis=0) - 0.1
    hi = body.vertices.max(axis=0) + 0.1
    pts = rng.uniform(lo, hi, size=(n_points, 3))
    tris = body.vertices[body.faces]
    args = (pts, tris)
    t_ref, (i_r, d_r, b_r) = _time(_ref.nearest_triangles, *args)
    row = [("numpy", t_ref)]
    if _fast is not None:
        t_fast, (i_f, d_f, b_f) = _time(_fast.nearest_triangles, *args)
        assert np.allclose(d_r, d_f, rtol=0, atol=1e-12), "backends disagree on distance"
        # differing indices are legitimate only at exact distance ties
        neq = i_r != i_f
        assert np.all(np.abs(d_r[neq] - d_f[neq]) < 1e-12), \
            "backends picked different faces at non-tied distances"
        row.append(("compiled", t_fast))
    return "nearest_triangles", n_points, row


def bench_ray_capsules(side=256, seed=0):
    identity = make_identity(0, 0)
    body = build_body(identity.beta)
    heads, rot, inv_scale = posed_capsules(body, SkeletonPose.identity())
    cam = ring_camera(0, 8, width=side, img_height=side)
    origins, dirs = cam.pixel_rays()
    args = (origins, dirs, heads, rot, inv_scale, body.len_base, body.rad_base)
    t_ref, (t_r, p_r, s_r, phi_r) = _time(_ref.ray_capsules, *args)
    row = [("numpy", t_ref)]
    if _fast is not None:
        t_fast, (t_f, p_f, s_f, phi_f) = _time(_fast.ray_capsules, *args)
        hit = p_r >= 0
        assert np.array_equal(p_r, p_f), "backends disagree on hit part"
        assert np.allclose(t_r[hit], t_f[hit], atol=1e-9), "backends disagree on t"
        row.append(("compiled", t_fast))
    return "ray_capsules", side * side, row


def main():
    print(f"active backend: {BACKEND}"
          + ("" if _fast is not None else "  (compiled extension unavailable)"))
    for name, n, rows in (bench_nearest_triangles(), bench_ray_capsules()):
        print(f"\n{name}  ({n} queries)")
        base = rows[0][1]
        for label, t in rows:
            speedup = f"  {base / t:5.1f}x" if label != "numpy" else ""
            print(f"  {label:>8}: {1e3 * t:8.2f} ms{speedup}")


if __name__ == "__main__":
    main()
