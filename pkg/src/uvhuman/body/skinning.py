"""Forward kinematics and linear blend skinning.

Bones rotate about their head joints; world transforms compose down the
hierarchy, so each bone's transform maps canonical points directly to posed
points and no inverse-bind step is needed. Inverse skinning inverts the
per-point blended matrix, which makes the forward/inverse round trip exact
for any skin weights.
"""

from __future__ import annotations

import numpy as np

from .humanoid import N_PARTS


class SkeletonPose:
    """Axis-angle joint rotations plus a root rigid motion.

    theta (16, 3) axis-angle per bone (radians); root_rot (3,) axis-angle
    applied about the pelvis joint; root_trans (3,) world translation.
    """

    def __init__(self, theta=None, root_rot=None, root_trans=None):
        self.theta = np.zeros((N_PARTS, 3)) if theta is None else np.asarray(theta, dtype=np.float64)
        if self.theta.shape != (N_PARTS, 3):
            raise ValueError(f"theta must be ({N_PARTS}, 3), got {self.theta.shape}")
        self.root_rot = np.zeros(3) if root_rot is None else np.asarray(root_rot, dtype=np.float64)
        self.root_trans = np.zeros(3) if root_trans is None else np.asarray(root_trans, dtype=np.float64)

    @staticmethod
    def identity():
        return SkeletonPose()

    def to_vector(self):
        return np.concatenate([self.theta.ravel(), self.root_rot, self.root_trans])

    @staticmethod
    def from_vector(vec):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (N_PARTS * 3 + 6,):
            raise ValueError(f"pose vector must have {N_PARTS * 3 + 6} entries, got {vec.shape}")
        return SkeletonPose(vec[:N_PARTS * 3].reshape(N_PARTS, 3), vec[-6:-3], vec[-3:])


def rodrigues(rvec):
    """Axis-angle vectors (..., 3) to rotation matrices (..., 3, 3)."""
    rvec = np.asarray(rvec, dtype=np.float64)
    theta = np.linalg.norm(rvec, axis=-1, keepdims=True)
    axis = rvec / np.maximum(theta, 1e-30)
    t = theta[..., None]
    c, s = np.cos(t), np.sin(t)
    x, y, z = axis[..., 0, None, None], axis[..., 1, None, None], axis[..., 2, None, None]
    zero = np.zeros_like(x)
    k = np.concatenate([
        np.concatenate([zero, -z, y], axis=-1),
        np.concatenate([z, zero, -x], axis=-1),
        np.concatenate([-y, x, zero], axis=-1),
    ], axis=-2)
    eye = np.broadcast_to(np.eye(3), k.shape)
    return c * eye + s * k + (1.0 - c) * (k @ k + eye)


def _compose(ra, ta, rb, tb):
    # (Ra, ta) o (Rb, tb): x -> Ra (Rb x + tb) + ta
    return ra @ rb, ra @ tb + ta


def bone_transforms(body, pose):
    """World transform per bone as rotations (16, 3, 3) and translations (16, 3)."""
    rots = rodrigues(pose.theta)                     # (16, 3, 3)
    world_r = np.zeros((N_PARTS, 3, 3))
    world_t = np.zeros((N_PARTS, 3))
    done = np.zeros(N_PARTS, dtype=bool)
    stack = [k for k in range(N_PARTS) if body.parents[k] < 0]
    root_r = rodrigues(pose.root_rot)
    while stack:
        k = stack.pop()
        h = body.joints[k]
        local_r = rots[k]
        local_t = h - local_r @ h                    # rotate about the head joint
        p = body.parents[k]
        if p < 0:
            pre_r, pre_t = root_r, body.joints[k] - root_r @ body.joints[k] + pose.root_trans
            world_r[k], world_t[k] = _compose(pre_r, pre_t, local_r, local_t)
        else:
            world_r[k], world_t[k] = _compose(world_r[p], world_t[p], local_r, local_t)
        done[k] = True
        stack.extend(int(c) for c in np.nonzero(body.parents == k)[0])
    assert done.all()
    return world_r, world_t


def blend_transforms(weights, world_r, world_t):
    """Per-point blended matrices: (P, 16) weights -> (P, 3, 3), (P, 3)."""
    r = np.einsum("pb,bij->pij", weights, world_r)
    t = weights @ world_t
    return r, t


def forward_lbs(points, weights, world_r, world_t):
    """Skin canonical points (P, 3) to the posed space."""
    r, t = blend_transforms(weights, world_r, world_t)
    return np.einsum("pij,pj->pi", r, points) + t


def inverse_lbs(points, weights, world_r, world_t):
    """Map posed points (P, 3) back to canonical space.

    Inverts each point's blended matrix directly; raises ValueError when a
    blended matrix is numerically singular.
    """
    r, t = blend_transforms(weights, world_r, world_t)
    det = np.linalg.det(r)
    if np.any(np.abs(det) < 1e-12):
        raise ValueError("blended skinning matrix is singular; cannot invert")
    rinv = np.linalg.inv(r)
    return np.einsum("pij,pj->pi", rinv, points - t)


def pose_vertices(body, pose):
    """Posed template vertices (V, 3) for one skeleton pose."""
    world_r, world_t = bone_transforms(body, pose)
    return forward_lbs(body.vertices, body.skin_weights, world_r, world_t)
