"""Window-normalized blending of the per-part fields.

blend_eval is the batched core used by the renderer (geometry inputs
precomputed); blended_query runs the full per-point chain from posed space:
inverse skinning -> nearest face -> latent lookup -> per-box query -> blend.
"""

from __future__ import annotations

import numpy as np

from ..body import (
    bone_transforms,
    inverse_lbs,
    nearest_faces,
    query_skin_weights,
    pose_vertices,
    template_distance,
)
from ..body.humanoid import N_PARTS
from ..latent.ops import sample_uv
from ..numerics.tensor import Tensor, scatter_add, take
from .density import sdf_to_density
from .localfield import query_local
from .window import WindowParams, box_coords, window_weight


def box_memberships(body, points, wp=None):
    """Window weights per point and part.

    Returns (coords (P, 16, 3) box-local coordinates, omega (P, 16) with
    zeros outside a part's box, normalized (P, 16) weights summing to 1 for
    points inside at least one box).
    """
    if wp is None:
        wp = WindowParams()
    points = np.asarray(points, dtype=np.float64)
    npts = points.shape[0]
    coords = np.zeros((npts, N_PARTS, 3))
    omega = np.zeros((npts, N_PARTS))
    for k in range(N_PARTS):
        c = box_coords(points, body.part_boxes[k])
        coords[:, k] = c
        inside = np.max(np.abs(c), axis=1) <= 1.0
        if np.any(inside):
            omega[inside, k] = window_weight(c[inside], wp)
    wsum = omega.sum(axis=1)
    norm = np.zeros_like(omega)
    hit = wsum > 0
    norm[hit] = omega[hit] / wsum[hit, None]
    return coords, omega, norm


def blend_core(params, cfg, coords, norm, z_pts, view_d, d_template):
    """Accumulate the per-part field outputs under precomputed memberships.

    coords (P, 16, 3) and norm (P, 16) come from box_memberships (possibly
    cached across rendering steps); z_pts (P, C) is the already-sampled
    latent. Returns (features (P, C_feat) Tensor, d_total (P,) Tensor,
    inside (P,) bool).
    """
    npts = coords.shape[0]
    inside = norm.sum(axis=1) > 0
    if not isinstance(z_pts, Tensor):
        z_pts = Tensor(z_pts)

    feat_total = Tensor(np.zeros((npts, cfg.feat_channels)))
    dd_total = Tensor(np.zeros((npts, 1)))
    for k in range(N_PARTS):
        sel = np.nonzero(norm[:, k] > 0.0)[0]
        if sel.size == 0:
            continue
        feat_k, dd_k = query_local(params, k, coords[sel, k], view_d[sel],
                                   take(z_pts, sel), cfg)
        w = norm[sel, k][:, None]
        feat_total = feat_total + scatter_add(feat_k * w, sel, npts)
        dd_total = dd_total + scatter_add(dd_k * w, sel, npts)

    d_total = dd_total[:, 0] + d_template
    return feat_total, d_total, inside


def blend_eval(params, cfg, body, x_canon, uv, d_template, view_d, z_map, wp=None):
    """Blend all contributing part fields at canonical points.

    x_canon (P, 3), uv (P, 2), d_template (P,), view_d (P, 3) are plain
    arrays; z_map is the (U, V, C) latent (Tensor for training). Points
    outside every box get zero features and d_total = d_template; callers
    must mask their density to zero via `inside`.
    """
    coords, _, norm = box_memberships(body, x_canon, wp)
    if not isinstance(z_map, Tensor):
        z_map = Tensor(np.asarray(z_map))
    z_pts = sample_uv(z_map, uv[:, 0], uv[:, 1])
    return blend_core(params, cfg, coords, norm, z_pts, view_d, d_template)


def blended_query(params, cfg, body, pose, x, view_d, z_map, alpha=0.1, wp=None,
                  posed_verts=None):
    """Full query chain for posed-space points x (P, 3).

    Returns (features (P, C_feat), sigma (P,)) as Tensors; sigma is exactly
    zero for points outside every part box.
    """
    x = np.asarray(x, dtype=np.float64)
    world_r, world_t = bone_transforms(body, pose)
    if posed_verts is None:
        posed_verts = pose_vertices(body, pose)
    weights = query_skin_weights(body, x, vertices=posed_verts)
    x_canon = inverse_lbs(x, weights, world_r, world_t)
    hit = nearest_faces(body, x_canon)
    d_template = template_distance(body, x_canon, hit=hit)
    feat, d_total, inside = blend_eval(params, cfg, body, x_canon, hit.uv,
                                       d_template, view_d, z_map, wp)
    sigma = sdf_to_density(d_total, alpha) * inside.astype(np.float64)
    return feat, sigma
