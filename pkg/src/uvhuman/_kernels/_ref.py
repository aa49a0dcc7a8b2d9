"""Pure numpy implementations of the hot geometry kernels.

Same signatures as the compiled module; used as the import-time fallback
and as the reference side of the kernel benchmark.
"""

from __future__ import annotations

import numpy as np


def _closest_bary(points, tris):
    """Barycentric coordinates of the closest point on each triangle.

    points (n, 3), tris (m, 3, 3) -> bary (n, m, 3). Region tests follow the
    standard closest-point-on-triangle case analysis, applied vectorized with
    first-match-wins masks.
    """
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]     # (m, 3)
    ab = b - a
    ac = c - a
    p = points[:, None, :]                            # (n, 1, 3)

    ap = p - a
    d1 = np.einsum("mk,nmk->nm", ab, ap)
    d2 = np.einsum("mk,nmk->nm", ac, ap)

    bp = p - b
    d3 = np.einsum("mk,nmk->nm", ab, bp)
    d4 = np.einsum("mk,nmk->nm", ac, bp)

    cp = p - c
    d5 = np.einsum("mk,nmk->nm", ab, cp)
    d6 = np.einsum("mk,nmk->nm", ac, cp)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    n, m = d1.shape
    bary = np.zeros((n, m, 3))
    assigned = np.zeros((n, m), dtype=bool)

    def claim(mask):
        take = mask & ~assigned
        assigned[take] = True
        return take

    with np.errstate(divide="ignore", invalid="ignore"):
        r = claim((d1 <= 0) & (d2 <= 0))                       # vertex a
        bary[r] = (1.0, 0.0, 0.0)

        r = claim((d3 >= 0) & (d4 <= d3))                      # vertex b
        bary[r] = (0.0, 1.0, 0.0)

        r = claim((vc <= 0) & (d1 >= 0) & (d3 <= 0))           # edge ab
        v = d1[r] / (d1[r] - d3[r])
        bary[r, 0] = 1.0 - v
        bary[r, 1] = v

        r = claim((d6 >= 0) & (d5 <= d6))                      # vertex c
        bary[r] = (0.0, 0.0, 1.0)

        r = claim((vb <= 0) & (d2 >= 0) & (d6 <= 0))           # edge ac
        w = d2[r] / (d2[r] - d6[r])
        bary[r, 0] = 1.0 - w
        bary[r, 2] = w

        r = claim((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0))  # edge bc
        w = (d4[r] - d3[r]) / ((d4[r] - d3[r]) + (d5[r] - d6[r]))
        bary[r, 1] = 1.0 - w
        bary[r, 2] = w

        r = claim(np.ones_like(assigned))                       # interior
        denom = va[r] + vb[r] + vc[r]
        v = vb[r] / denom
        w = vc[r] / denom
        bary[r, 0] = 1.0 - v - w
        bary[r, 1] = v
        bary[r, 2] = w

    return bary


def nearest_triangles(points, tris, chunk=256):
    """Closest triangle per query point by exhaustive scan.

    points (n, 3) and tris (m, 3, 3), both float64. Returns
    (index (n,) int64, sqdist (n,), bary (n, 3)); ties resolve to the
    smallest triangle index.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.float64)
    n = points.shape[0]
    idx = np.empty(n, dtype=np.int64)
    sqd = np.empty(n, dtype=np.float64)
    bary = np.empty((n, 3), dtype=np.float64)
    for lo in range(0, n, chunk):
        p = points[lo:lo + chunk]
        bb = _closest_bary(p, tris)                         # (nc, m, 3)
        closest = np.einsum("nmk,mkd->nmd", bb, tris)       # (nc, m, 3)
        diff = closest - p[:, None, :]
        d2 = np.einsum("nmd,nmd->nm", diff, diff)
        j = np.argmin(d2, axis=1)                           # first min = lowest index
        r = np.arange(p.shape[0])
        idx[lo:lo + chunk] = j
        sqd[lo:lo + chunk] = d2[r, j]
        bary[lo:lo + chunk] = bb[r, j]
    return idx, sqd, bary


def ray_capsules(origins, dirs, heads, rot, inv_scale, lengths, radii, t_min=1e-6):
    """First hit of each ray against a set of scaled capsules.

    origins/dirs (R, 3); per capsule k: rot (K, 3, 3) world-to-local rows
    (local z = bone axis), inv_scale (K, 3) reciprocal axis scales applied
    after rotation, lengths (K,) axial extent, radii (K,). Returns
    (t (R,), part (R,) int64 with -1 for misses, s (R,) axial fraction,
    phi (R,) angle). t is in world ray units.
    """
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    nray = origins.shape[0]
    best_t = np.full(nray, np.inf)
    best_part = np.full(nray, -1, dtype=np.int64)
    best_s = np.zeros(nray)
    best_phi = np.zeros(nray)

    for k in range(len(lengths)):
        o = (origins - heads[k]) @ rot[k].T * inv_scale[k]
        d = dirs @ rot[k].T * inv_scale[k]
        L, r = float(lengths[k]), float(radii[k])

        cand_t = np.full(nray, np.inf)

        # infinite cylinder, clipped to the segment
        qa = d[:, 0] ** 2 + d[:, 1] ** 2
        qb = 2.0 * (o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1])
        qc = o[:, 0] ** 2 + o[:, 1] ** 2 - r * r
        disc = qb * qb - 4.0 * qa * qc
        ok = (disc >= 0) & (qa > 1e-18)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            for sign in (-1.0, 1.0):
                t = (-qb + sign * sq) / (2.0 * qa)
                z = o[:, 2] + t * d[:, 2]
                good = ok & (t > t_min) & (z >= 0.0) & (z <= L) & (t < cand_t)
                cand_t[good] = t[good]

        # end caps
        for cz in (0.0, L):
            oc = o.copy()
            oc[:, 2] -= cz
            sb = 2.0 * np.einsum("nd,nd->n", oc, d)
            sc = np.einsum("nd,nd->n", oc, oc) - r * r
            sa = np.einsum("nd,nd->n", d, d)
            disc = sb * sb - 4.0 * sa * sc
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                for sign in (-1.0, 1.0):
                    t = (-sb + sign * sq) / (2.0 * sa)
                    z = o[:, 2] + t * d[:, 2]
                    inside_seg = (z < 0.0) if cz == 0.0 else (z > L)
                    good = ok & (t > t_min) & inside_seg & (t < cand_t)
                    cand_t[good] = t[good]

        closer = cand_t < best_t
        if np.any(closer):
            t = cand_t[closer]
            hit = o[closer] + t[:, None] * d[closer]
            best_t[closer] = t
            best_part[closer] = k
            best_s[closer] = np.clip(hit[:, 2] / max(L, 1e-12), 0.0, 1.0)
            best_phi[closer] = np.arctan2(hit[:, 1], hit[:, 0])

    return best_t, best_part, best_s, best_phi
