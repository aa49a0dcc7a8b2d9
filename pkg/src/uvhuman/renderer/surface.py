"""Normal and depth map extraction from the blended distance field."""

from __future__ import annotations

import numpy as np

from ..body import bone_transforms, nearest_faces, pose_vertices, query_skin_weights
from ..body.meshquery import template_distance
from ..body.skinning import inverse_lbs
from ..fields.blend import blend_core, box_memberships
from ..latent.ops import sample_uv
from .frame import render_features

FD_STEP = 1e-3
OPACITY_CUT = 0.5


def blended_sdf(params, cfg, body, pose, x, z_map, wp=None, posed_verts=None):
    """Total signed distance (template + blended delta) at posed points (P,).

    Plain float64 output; the view direction only feeds the radiance head,
    so a fixed dummy direction is used here.
    """
    x = np.asarray(x, dtype=np.float64)
    world_r, world_t = bone_transforms(body, pose)
    if posed_verts is None:
        posed_verts = pose_vertices(body, pose)
    weights = query_skin_weights(body, x, vertices=posed_verts)
    x_canon = inverse_lbs(x, weights, world_r, world_t)
    hit = nearest_faces(body, x_canon)
    d_template = template_distance(body, x_canon, hit=hit)
    coords, _, norm = box_memberships(body, x_canon, wp)
    view_d = np.zeros_like(x)
    view_d[:, 2] = 1.0
    z_pts = sample_uv(np.asarray(getattr(z_map, "data", z_map)),
                      hit.uv[:, 0], hit.uv[:, 1])
    _, d_total, _ = blend_core(params, cfg, coords, norm, z_pts, view_d, d_template)
    return np.asarray(d_total.data, dtype=np.float64)


def render_normal_depth(params, cfg, body, pose, camera, z, n_samples=None,
                        seed=0, alpha=0.1, wp=None, geom=None):
    """(H, W, 3) unit normals and (H, W) depth for one view.

    Normals are the normalized finite-difference gradient of the total
    signed distance at each pixel's depth-expected surface point, evaluated
    where accumulated opacity exceeds 0.5; elsewhere the normal is zero and
    the depth is the frame's far plane.
    """
    kwargs = {} if n_samples is None else {"n_samples": n_samples}
    img = render_features(params, cfg, body, pose, camera, z, seed=seed,
                          alpha=alpha, wp=wp, geom=geom, **kwargs)
    h, w = img.depth.shape
    depth = np.asarray(img.depth.data, dtype=np.float64).copy()
    opac = np.asarray(img.opacity.data, dtype=np.float64)
    solid = (opac > OPACITY_CUT).ravel()
    normals = np.zeros((h * w, 3))
    depth_flat = depth.ravel()
    depth_flat[~solid] = img.max_far

    idx = np.nonzero(solid)[0]
    if idx.size:
        rays = geom.rays if geom is not None else None
        if rays is None:
            from .rays import make_rays
            rays = make_rays(camera, body, pose)
        xs = rays.origins[idx] + depth_flat[idx, None] * rays.dirs[idx]
        offsets = np.concatenate([np.eye(3), -np.eye(3)]) * FD_STEP   # (6, 3)
        probes = (xs[:, None, :] + offsets[None, :, :]).reshape(-1, 3)
        d = blended_sdf(params, cfg, body, pose, probes, z, wp).reshape(-1, 6)
        g = (d[:, :3] - d[:, 3:]) / (2.0 * FD_STEP)
        nrm = np.linalg.norm(g, axis=1, keepdims=True)
        ok = nrm[:, 0] > 1e-12
        normals[idx[ok]] = g[ok] / nrm[ok]
    return normals.reshape(h, w, 3), depth_flat.reshape(h, w)
