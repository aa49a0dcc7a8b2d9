"""Nearest-face queries against the template (or a same-topology posed copy).

The search is exhaustive in effect but pruned by part: a part's faces are
only scanned when its tight vertex box could beat the proven upper bound,
so results (including smallest-face-index tie resolution) are identical to
a brute-force scan over all faces.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .humanoid import N_PARTS


class FaceHit:
    """Result of a nearest-face query.

    face (P,) int64 global face index; bary (P, 3); uv (P, 2) chart
    coordinates of the closest point; dist (P,) signed distance (positive
    outside, by the face normal at the closest point).
    """

    __slots__ = ("face", "bary", "uv", "dist")

    def __init__(self, face, bary, uv, dist):
        self.face = face
        self.bary = bary
        self.uv = uv
        self.dist = dist


def _box_sq_gap(points, lo, hi):
    # squared distance from each point to an AABB (0 inside)
    d = np.maximum(np.maximum(lo - points, 0.0), points - hi)
    return np.einsum("pd,pd->p", d, d)


def _box_sq_far(points, lo, hi):
    # squared distance to the farthest corner of an AABB
    d = np.maximum(np.abs(points - lo), np.abs(points - hi))
    return np.einsum("pd,pd->p", d, d)


def _capsule_distance_bounds(body, points):
    """Lower/upper bounds (P, 16) on each point's distance to each part's
    scaled capsule surface.

    Distances are computed in the part's unscaled local space; anisotropic
    axis scaling distorts the metric by a factor between the smallest and
    largest axis scale, which gives the two bounds.
    """
    lo = np.empty((points.shape[0], N_PARTS))
    hi = np.empty((points.shape[0], N_PARTS))
    for k in range(N_PARTS):
        q = (points - body.joints[k]) @ body.frames[k].T
        q[:, :2] /= body.beta.radius[k]
        q[:, 2] /= body.beta.length[k]
        z = np.clip(q[:, 2], 0.0, body.len_base[k])
        d = np.abs(np.sqrt(q[:, 0] ** 2 + q[:, 1] ** 2 + (q[:, 2] - z) ** 2) - body.rad_base[k])
        lo[:, k] = d * min(body.beta.radius[k], body.beta.length[k])
        hi[:, k] = d * max(body.beta.radius[k], body.beta.length[k])
    return lo, hi


def nearest_faces(body, points, vertices=None):
    """Nearest template face per query point; exact, part-pruned.

    vertices overrides the canonical vertex positions (same topology), which
    is how posed-space queries are run. Ties go to the smallest face index.
    Pruning never changes the result: a part is skipped only when a provable
    lower bound on its face distances exceeds a provable upper bound on the
    best distance; surviving faces are scanned with the same arithmetic as
    the brute-force oracle.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"query points must be (P, 3), got {points.shape}")
    npts = points.shape[0]

    if vertices is None:
        verts = body.vertices
        # analytic pruning: each part's mesh lies within chord_bound of its
        # capsule, so capsule distance +/- chord brackets its face distances
        lo, hi = _capsule_distance_bounds(body, points)       # (P, 16) each
        bound = hi.min(axis=1) + body.chord_bound
        candidate = np.maximum(lo - body.chord_bound, 0.0) <= bound[:, None]
    else:
        verts = np.asarray(vertices, dtype=np.float64)
        tight = np.zeros((N_PARTS, 2, 3))
        for k in range(N_PARTS):
            pv = verts[body.part_of_vertex == k]
            tight[k, 0] = pv.min(axis=0)
            tight[k, 1] = pv.max(axis=0)
        gap = np.stack([_box_sq_gap(points, tight[k, 0], tight[k, 1]) for k in range(N_PARTS)], axis=1)
        far = np.stack([_box_sq_far(points, tight[k, 0], tight[k, 1]) for k in range(N_PARTS)], axis=1)
        candidate = gap <= far.min(axis=1)[:, None]           # (P, 16)

    best_face = np.full(npts, -1, dtype=np.int64)
    best_sq = np.full(npts, np.inf)
    best_bary = np.zeros((npts, 3))

    tris_all = verts[body.faces]
    for k in range(N_PARTS):
        sel = np.nonzero(candidate[:, k])[0]
        if sel.size == 0:
            continue
        f0, f1 = int(body.face_start[k]), int(body.face_start[k + 1])
        idx, sq, bary = _kernels.nearest_triangles(points[sel], tris_all[f0:f1])
        face = idx + f0
        better = (sq < best_sq[sel]) | ((sq == best_sq[sel]) & (face < best_face[sel]))
        upd = sel[better]
        best_face[upd] = face[better]
        best_sq[upd] = sq[better]
        best_bary[upd] = bary[better]

    uv = np.einsum("pk,pkd->pd", best_bary, body.face_uv[best_face])
    closest = np.einsum("pk,pkd->pd", best_bary, verts[body.faces[best_face]])
    if vertices is None:
        normals = body.face_normals[best_face]
    else:
        tri = tris_all[best_face]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        normals = n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-30)
    sign = np.where(np.einsum("pd,pd->p", points - closest, normals) >= 0.0, 1.0, -1.0)
    dist = sign * np.sqrt(best_sq)
    return FaceHit(best_face, best_bary, uv, dist)


def nearest_faces_brute(body, points, vertices=None):
    """Unpruned scan over every face; oracle for the pruned query."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    verts = body.vertices if vertices is None else np.asarray(vertices, dtype=np.float64)
    tris = verts[body.faces]
    idx, sq, bary = _kernels.nearest_triangles(points, tris)
    uv = np.einsum("pk,pkd->pd", bary, body.face_uv[idx])
    closest = np.einsum("pk,pkd->pd", bary, tris[idx])
    n = np.cross(tris[idx, 1] - tris[idx, 0], tris[idx, 2] - tris[idx, 0])
    n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-30)
    sign = np.where(np.einsum("pd,pd->p", points - closest, n) >= 0.0, 1.0, -1.0)
    return FaceHit(idx, bary, uv, sign * np.sqrt(sq))


def capsule_contains(body, points):
    """Exact membership in the union of the body's scaled capsules (P,) bool."""
    points = np.asarray(points, dtype=np.float64)
    inside = np.zeros(points.shape[0], dtype=bool)
    for k in range(N_PARTS):
        q = (points - body.joints[k]) @ body.frames[k].T
        q[:, :2] /= body.beta.radius[k]
        q[:, 2] /= body.beta.length[k]
        z = np.clip(q[:, 2], 0.0, body.len_base[k])
        d2 = q[:, 0] ** 2 + q[:, 1] ** 2 + (q[:, 2] - z) ** 2
        inside |= d2 <= body.rad_base[k] ** 2
    return inside


def template_distance(body, points, hit=None):
    """Template signed distance: mesh distance signed by union membership.

    The per-face normal sign that nearest_faces reports is wrong deep in
    capsule overlap regions (the nearest face may be buried inside another
    part), so the sign here comes from the analytic capsule union instead.
    """
    if hit is None:
        hit = nearest_faces(body, points)
    d = np.abs(hit.dist)
    return np.where(capsule_contains(body, points), -d, d)


def query_skin_weights(body, points, vertices=None):
    """Skin weights for arbitrary points: nearest-face barycentric blend.

    Rows are convex combinations of vertex weights, so they stay
    non-negative and sum to one.
    """
    hit = nearest_faces(body, points, vertices=vertices)
    vw = body.skin_weights[body.faces[hit.face]]         # (P, 3, 16)
    return np.einsum("pk,pkb->pb", hit.bary, vw)
