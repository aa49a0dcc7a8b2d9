"""Procedurally textured synthetic identities and their analytic renders.

The ground-truth renderer intersects pixel rays with the posed capsule
union directly (no neural networks) and paints each part with a striped
procedural texture in the capsule's own (axial, angular) surface
coordinates, so appearance is attached to the body, not the screen.
Each part draws from a distinct fixed hue family, which is what makes part
swaps verifiable by mean-color tests later.
"""

from __future__ import annotations

import colorsys

import numpy as np

from .. import _kernels
from ..body import SkeletonPose, ShapeParams, bone_transforms, build_body
from ..body.humanoid import N_PARTS

SKIN_TONE = np.array([0.87, 0.72, 0.60])
# fixed hue per part (fractions of the color wheel), spread so neighboring
# parts contrast
PART_HUES = (np.arange(N_PARTS) * 7 % N_PARTS) / N_PARTS

WIGGLE_JOINTS = tuple(k for k in range(N_PARTS) if k != 3)   # all but the root
POSE_RANGE = 0.25        # radians, per axis


class SyntheticIdentity:
    """Appearance genome plus shape for one synthetic subject."""

    def __init__(self, ident, base_colors, stripe_freq, stripe_phase, tone, beta):
        self.ident = int(ident)
        self.base_colors = np.asarray(base_colors, dtype=np.float64)  # (16, 3)
        self.stripe_freq = np.asarray(stripe_freq, dtype=np.float64)  # (16,)
        self.stripe_phase = np.asarray(stripe_phase, dtype=np.float64)
        self.tone = float(tone)
        self.beta = beta
        if self.base_colors.min() < 0 or self.base_colors.max() > 1:
            raise ValueError("base colors must lie in [0, 1]")

    def to_dict(self):
        return {
            "ident": self.ident,
            "base_colors": self.base_colors.tolist(),
            "stripe_freq": self.stripe_freq.tolist(),
            "stripe_phase": self.stripe_phase.tolist(),
            "tone": self.tone,
            "beta_length": self.beta.length.tolist(),
            "beta_radius": self.beta.radius.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return SyntheticIdentity(
            d["ident"], d["base_colors"], d["stripe_freq"], d["stripe_phase"],
            d["tone"], ShapeParams(d["beta_length"], d["beta_radius"]))


def make_identity(dataset_seed, ident):
    """Deterministic genome for identity `ident` of a dataset."""
    rng = np.random.default_rng([int(dataset_seed), int(ident)])
    tone = rng.uniform(0.0, 1.0)
    colors = np.zeros((N_PARTS, 3))
    for k in range(N_PARTS):
        h = (PART_HUES[k] + rng.uniform(-0.02, 0.02)) % 1.0
        s = rng.uniform(0.45, 0.85)
        v = rng.uniform(0.45, 0.9)
        colors[k] = colorsys.hsv_to_rgb(h, s, v)
    colors = (1.0 - 0.25 * tone) * colors + 0.25 * tone * SKIN_TONE
    freq = rng.uniform(1.0, 4.0, size=N_PARTS)
    phase = rng.uniform(0.0, 1.0, size=N_PARTS)
    beta = ShapeParams(rng.uniform(0.85, 1.2, size=N_PARTS),
                       rng.uniform(0.85, 1.2, size=N_PARTS))
    return SyntheticIdentity(ident, colors, freq, phase, tone, beta)


def sample_pose(rng, canonical=False):
    """A bounded random articulation (the canonical rest pose if asked)."""
    pose = SkeletonPose.identity()
    if not canonical:
        for k in WIGGLE_JOINTS:
            pose.theta[k] = rng.uniform(-POSE_RANGE, POSE_RANGE, size=3)
    return pose


def posed_capsules(body, pose):
    """Per-part (head, world-to-local rows, inverse scale) for ray casting."""
    world_r, world_t = bone_transforms(body, pose)
    heads = np.einsum("kij,kj->ki", world_r, body.joints) + world_t
    rot = np.einsum("kij,kmj->kim", body.frames, world_r)   # frames @ R^T
    inv_scale = np.stack([1.0 / body.beta.radius, 1.0 / body.beta.radius,
                          1.0 / body.beta.length], axis=1)
    return heads, rot, inv_scale


def texture_color(identity, part, s, phi):
    """Albedo at capsule surface coords: striped along the axis, banded in angle."""
    base = identity.base_colors[part]                        # (P, 3)
    f = identity.stripe_freq[part]
    p = identity.stripe_phase[part]
    stripe = 0.5 + 0.5 * np.sin(2.0 * np.pi * (f * s + p))
    band = 0.5 + 0.5 * np.sin(3.0 * phi + 2.0 * np.pi * p)
    shade = 0.62 + 0.28 * stripe + 0.10 * band
    return base * shade[:, None]


def render_reference(identity, pose, camera, supersample=2, body=None):
    """Analytic ground-truth render -> float (H, W, 3) in [0, 1], white background."""
    if body is None:
        body = build_body(identity.beta)
    ss = max(1, int(supersample))
    cam = camera.resize(camera.width * ss, camera.height * ss) if ss > 1 else camera
    origins, dirs = cam.pixel_rays()
    heads, rot, inv_scale = posed_capsules(body, pose)
    t, part, s, phi = _kernels.ray_capsules(
        np.ascontiguousarray(origins), np.ascontiguousarray(dirs),
        np.ascontiguousarray(heads), np.ascontiguousarray(rot),
        np.ascontiguousarray(inv_scale), np.ascontiguousarray(body.len_base),
        np.ascontiguousarray(body.rad_base))
    img = np.ones((origins.shape[0], 3))
    hit = part >= 0
    if np.any(hit):
        img[hit] = texture_color(identity, part[hit], s[hit], phi[hit])
    img = img.reshape(cam.height, cam.width, 3)
    if ss > 1:
        img = img.reshape(camera.height, ss, camera.width, ss, 3).mean(axis=(1, 3))
    return np.clip(img, 0.0, 1.0)


def reference_silhouette(identity, pose, camera, body=None):
    """Boolean (H, W) analytic hit mask at the camera's native resolution."""
    if body is None:
        body = build_body(identity.beta)
    origins, dirs = camera.pixel_rays()
    heads, rot, inv_scale = posed_capsules(body, pose)
    _, part, _, _ = _kernels.ray_capsules(
        np.ascontiguousarray(origins), np.ascontiguousarray(dirs),
        np.ascontiguousarray(heads), np.ascontiguousarray(rot),
        np.ascontiguousarray(inv_scale), np.ascontiguousarray(body.len_base),
        np.ascontiguousarray(body.rad_base))
    return (part >= 0).reshape(camera.height, camera.width)
