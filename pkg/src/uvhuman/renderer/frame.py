"""Full-frame feature rendering with a reusable per-frame geometry cache.

For a fixed (body, pose, camera, seed) tuple everything geometric — sample
positions, canonical correspondences, template distances, window
memberships — is independent of the network parameters and the latent, so
the auto-decoder loop computes it once per frame and replays it every step.
"""

from __future__ import annotations

import numpy as np

from ..body import bone_transforms, nearest_faces, pose_vertices, query_skin_weights
from ..body.meshquery import template_distance
from ..body.skinning import inverse_lbs
from ..fields.blend import blend_core, box_memberships
from ..fields.density import sdf_to_density
from ..latent.ops import sample_uv
from ..numerics.tensor import Tensor, scatter_add
from .quadrature import composite_ray, stratified_samples
from .rays import make_rays

FEATURE_CHANNELS = 16    # C-bar; channels 0..2 are the low-resolution RGB
N_SAMPLES = 24


def background_feature(channels):
    """Zeros with the RGB slots set to one (white)."""
    bg = np.zeros(channels)
    bg[: min(3, channels)] = 1.0
    return bg


class FrameGeometry:
    """Cached geometry for one (body, pose, camera, seed) frame."""

    def __init__(self, rays, fg, t, view_d, uv, d_template, coords, norm):
        self.rays = rays
        self.fg = fg                  # (F,) indices of rays that hit a box
        self.t = t                    # (F, N) sample distances
        self.view_d = view_d          # (F*N, 3) unit view directions
        self.uv = uv                  # (F*N, 2)
        self.d_template = d_template  # (F*N,)
        self.coords = coords          # (F*N, 16, 3) box-local coordinates
        self.norm = norm              # (F*N, 16) normalized window weights

    @property
    def n_samples(self):
        return self.t.shape[1] if self.fg.size else 0


def frame_geometry(body, pose, camera, n_samples=N_SAMPLES, seed=0, wp=None):
    """Precompute every parameter-independent quantity for one frame."""
    rays = make_rays(camera, body, pose)
    fg = np.nonzero(rays.hit)[0]
    if fg.size == 0:
        empty = np.zeros((0, 0))
        return FrameGeometry(rays, fg, empty, np.zeros((0, 3)), np.zeros((0, 2)),
                             np.zeros(0), np.zeros((0, 16, 3)), np.zeros((0, 16)))
    rng = np.random.default_rng(seed)
    t = stratified_samples(rays.near[fg], rays.far[fg], n_samples, rng)
    x = rays.origins[fg, None, :] + t[:, :, None] * rays.dirs[fg, None, :]
    x = x.reshape(-1, 3)
    view_d = np.repeat(rays.dirs[fg], n_samples, axis=0)

    world_r, world_t = bone_transforms(body, pose)
    posed_verts = pose_vertices(body, pose)
    weights = query_skin_weights(body, x, vertices=posed_verts)
    x_canon = inverse_lbs(x, weights, world_r, world_t)
    hit = nearest_faces(body, x_canon)
    d_template = template_distance(body, x_canon, hit=hit)
    coords, _, norm = box_memberships(body, x_canon, wp)
    return FrameGeometry(rays, fg, t, view_d, hit.uv, d_template, coords, norm)


class FeatureImage:
    """Rendered feature grid plus the per-pixel depth/opacity companions.

    feature is (H, W, C) with channels 0..2 the low-resolution RGB; depth
    and opacity are (H, W). All three are Tensors when gradients are being
    tracked. max_far is the far plane used for background depth.
    """

    def __init__(self, feature, depth, opacity, hit, max_far):
        self.feature = feature
        self.depth = depth
        self.opacity = opacity
        self.hit = hit
        self.max_far = float(max_far)

    @property
    def rgb(self):
        return self.feature[:, :, :3]


def render_features(params, cfg, body, pose, camera, z, n_samples=N_SAMPLES,
                    seed=0, alpha=0.1, wp=None, geom=None):
    """Volume-render the blended fields into a FeatureImage.

    z is the (U, V, C) structured latent (Tensor to get gradients); alpha
    the density sharpness (float or Tensor). Rendering twice with the same
    seed is bit-identical: the only randomness is the stratified jitter,
    which is drawn from a fresh seeded generator.
    """
    if geom is None:
        geom = frame_geometry(body, pose, camera, n_samples, seed, wp)
    rays = geom.rays
    nray = rays.count
    cbar = cfg.feat_channels
    bg = background_feature(cbar)
    max_far = float(rays.far.max()) if geom.fg.size else 0.0

    base = np.tile(bg, (nray, 1))
    base[geom.fg] = 0.0
    if geom.fg.size == 0:
        feature = Tensor(base)
        depth = Tensor(np.full(nray, max_far))
        opacity = Tensor(np.zeros(nray))
    else:
        if not isinstance(z, Tensor):
            z = Tensor(np.asarray(z))
        z_pts = sample_uv(z, geom.uv[:, 0], geom.uv[:, 1])
        feats, d_total, inside = blend_core(params, cfg, geom.coords, geom.norm,
                                            z_pts, geom.view_d, geom.d_template)
        sigma = sdf_to_density(d_total, alpha) * inside.astype(np.float64)
        nsamp = geom.n_samples
        nfg = geom.fg.size
        feat_r, depth_fg, opac_fg, bg_w = composite_ray(
            sigma.reshape(nfg, nsamp), feats.reshape(nfg, nsamp, cbar),
            geom.t, rays.far[geom.fg])
        pix_fg = feat_r + bg_w.reshape(nfg, 1) * bg
        feature = Tensor(base) + scatter_add(pix_fg, geom.fg, nray)

        depth_base = np.full(nray, max_far)
        depth_base[geom.fg] = 0.0
        depth = Tensor(depth_base) + scatter_add(depth_fg, geom.fg, nray)
        opacity = Tensor(np.zeros(nray)) + scatter_add(opac_fg, geom.fg, nray)

    h, w = rays.height, rays.width
    return FeatureImage(feature.reshape(h, w, cbar), depth.reshape(h, w),
                        opacity.reshape(h, w), rays.hit.reshape(h, w), max_far)
