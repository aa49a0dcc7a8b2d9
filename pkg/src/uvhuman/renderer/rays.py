"""Pixel rays clipped against the union of posed part boxes."""

from __future__ import annotations

import numpy as np

from ..body import bone_transforms
from ..body.humanoid import N_PARTS

RAY_EPS = 1e-4           # minimum near distance in front of the camera


class RayBatch:
    """Per-pixel rays with [near, far] from posed-box intersections.

    origins/dirs are (R, 3) with R = H*W in row-major pixel order; `hit`
    marks rays that intersect at least one part box. near/far are only
    meaningful where hit is True.
    """

    def __init__(self, origins, dirs, near, far, hit, height, width):
        self.origins = origins
        self.dirs = dirs
        self.near = near
        self.far = far
        self.hit = hit
        self.height = int(height)
        self.width = int(width)

    @property
    def count(self):
        return self.origins.shape[0]


def _slab_hits(o, d, lo, hi):
    """Per-ray entry/exit of one axis-aligned box; entry > exit means miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (lo[None, :] - o) / d
        t1 = (hi[None, :] - o) / d
    enter = np.minimum(t0, t1)
    exit_ = np.maximum(t0, t1)
    # a ray parallel to a slab (d == 0) hits iff the origin lies inside it;
    # the override must come after the min/max or the empty interval flips
    par = d == 0.0
    inside = (o >= lo[None, :]) & (o <= hi[None, :])
    enter = np.where(par, np.where(inside, -np.inf, np.inf), enter)
    exit_ = np.where(par, np.where(inside, np.inf, -np.inf), exit_)
    tmin = enter.max(axis=1)
    tmax = exit_.min(axis=1)
    return tmin, tmax


def box_ray_range(origins, dirs, boxes, world_r=None, world_t=None):
    """[near, far] of the union of (optionally rigidly transformed) boxes.

    boxes is (K, 2, 3) lo/hi in each box's rest frame; world_r/world_t pose
    frame k by x -> R_k x + t_k. Returns (near, far, hit) over rays.
    """
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    nray = origins.shape[0]
    near = np.full(nray, np.inf)
    far = np.full(nray, -np.inf)
    for k in range(boxes.shape[0]):
        if world_r is not None:
            o = (origins - world_t[k]) @ world_r[k]      # R^T (o - t), row-wise
            d = dirs @ world_r[k]
        else:
            o, d = origins, dirs
        tmin, tmax = _slab_hits(o, d, boxes[k, 0], boxes[k, 1])
        ok = (tmin <= tmax) & (tmax > RAY_EPS)
        near[ok] = np.minimum(near[ok], tmin[ok])
        far[ok] = np.maximum(far[ok], tmax[ok])
    hit = np.isfinite(near) & (far > near)
    near = np.where(hit, np.maximum(near, RAY_EPS), 0.0)
    far = np.where(hit, far, 0.0)
    return near, far, hit


def make_rays(camera, body, pose):
    """RayBatch for every pixel of `camera` against the posed body."""
    origins, dirs = camera.pixel_rays()
    world_r, world_t = bone_transforms(body, pose)
    near, far, hit = box_ray_range(origins, dirs, body.part_boxes, world_r, world_t)
    return RayBatch(origins, dirs, near, far, hit, camera.height, camera.width)
