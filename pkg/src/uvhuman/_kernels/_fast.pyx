# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled geometry kernels; see _ref.py for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, atan2, sqrt

cnp.import_array()


cdef inline double _dot3(double ax, double ay, double az,
                         double bx, double by, double bz) nogil:
    return ax * bx + ay * by + az * bz


def nearest_triangles(points, tris):
    """Closest triangle per query point; ties resolve to the smallest index."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] T = np.ascontiguousarray(tris, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], m = T.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_sq = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_bary = np.empty((n, 3), dtype=np.float64)

    cdef Py_ssize_t i, j, best_j
    cdef double px, py, pz
    cdef double ax, ay, az, abx, aby, abz, acx, acy, acz
    cdef double apx, apy, apz, bpx, bpy, bpz, cpx, cpy, cpz
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, v, w, denom
    cdef double qx, qy, qz, dx, dy, dz, sq, best_sq, b0, b1, b2, bb0, bb1, bb2

    with nogil:
        for i in range(n):
            px = P[i, 0]; py = P[i, 1]; pz = P[i, 2]
            best_sq = 1e300
            best_j = -1
            bb0 = 1.0; bb1 = 0.0; bb2 = 0.0
            for j in range(m):
                ax = T[j, 0, 0]; ay = T[j, 0, 1]; az = T[j, 0, 2]
                abx = T[j, 1, 0] - ax; aby = T[j, 1, 1] - ay; abz = T[j, 1, 2] - az
                acx = T[j, 2, 0] - ax; acy = T[j, 2, 1] - ay; acz = T[j, 2, 2] - az
                apx = px - ax; apy = py - ay; apz = pz - az
                d1 = _dot3(abx, aby, abz, apx, apy, apz)
                d2 = _dot3(acx, acy, acz, apx, apy, apz)
                if d1 <= 0.0 and d2 <= 0.0:
                    b0 = 1.0; b1 = 0.0; b2 = 0.0
                else:
                    bpx = px - T[j, 1, 0]; bpy = py - T[j, 1, 1]; bpz = pz - T[j, 1, 2]
                    d3 = _dot3(abx, aby, abz, bpx, bpy, bpz)
                    d4 = _dot3(acx, acy, acz, bpx, bpy, bpz)
                    if d3 >= 0.0 and d4 <= d3:
                        b0 = 0.0; b1 = 1.0; b2 = 0.0
                    else:
                        vc = d1 * d4 - d3 * d2
                        if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                            v = d1 / (d1 - d3)
                            b0 = 1.0 - v; b1 = v; b2 = 0.0
                        else:
                            cpx = px - T[j, 2, 0]; cpy = py - T[j, 2, 1]; cpz = pz - T[j, 2, 2]
                            d5 = _dot3(abx, aby, abz, cpx, cpy, cpz)
                            d6 = _dot3(acx, acy, acz, cpx, cpy, cpz)
                            if d6 >= 0.0 and d5 <= d6:
                                b0 = 0.0; b1 = 0.0; b2 = 1.0
                            else:
                                vb = d5 * d2 - d1 * d6
                                if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                                    w = d2 / (d2 - d6)
                                    b0 = 1.0 - w; b1 = 0.0; b2 = w
                                else:
                                    va = d3 * d6 - d5 * d4
                                    if va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
                                        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                                        b0 = 0.0; b1 = 1.0 - w; b2 = w
                                    else:
                                        denom = va + vb + vc
                                        v = vb / denom
                                        w = vc / denom
                                        b0 = 1.0 - v - w; b1 = v; b2 = w
                qx = b0 * T[j, 0, 0] + b1 * T[j, 1, 0] + b2 * T[j, 2, 0]
                qy = b0 * T[j, 0, 1] + b1 * T[j, 1, 1] + b2 * T[j, 2, 1]
                qz = b0 * T[j, 0, 2] + b1 * T[j, 1, 2] + b2 * T[j, 2, 2]
                dx = px - qx; dy = py - qy; dz = pz - qz
                sq = dx * dx + dy * dy + dz * dz
                if sq < best_sq:
                    best_sq = sq
                    best_j = j
                    bb0 = b0; bb1 = b1; bb2 = b2
            out_idx[i] = best_j
            out_sq[i] = best_sq
            out_bary[i, 0] = bb0; out_bary[i, 1] = bb1; out_bary[i, 2] = bb2
    return out_idx, out_sq, out_bary


def ray_capsules(origins, dirs, heads, rot, inv_scale, lengths, radii, double t_min=1e-6):
    """First hit of each ray against a set of scaled capsules; see _ref."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] O = np.ascontiguousarray(origins, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] D = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] H = np.ascontiguousarray(heads, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] R = np.ascontiguousarray(rot, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S = np.ascontiguousarray(inv_scale, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] LEN = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] RAD = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t nray = O.shape[0], nparts = LEN.shape[0]

    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_t = np.full(nray, np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_part = np.full(nray, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_s = np.zeros(nray)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_phi = np.zeros(nray)

    cdef Py_ssize_t i, k, c, sgn
    cdef double wx, wy, wz, ox, oy, oz, dx, dy, dz, L, r
    cdef double qa, qb, qc, disc, sqd, t, z, cand, cz, sa, sb, sc
    cdef double hx, hy, hz

    with nogil:
        for i in range(nray):
            for k in range(nparts):
                L = LEN[k]; r = RAD[k]
                wx = O[i, 0] - H[k, 0]; wy = O[i, 1] - H[k, 1]; wz = O[i, 2] - H[k, 2]
                ox = (R[k, 0, 0] * wx + R[k, 0, 1] * wy + R[k, 0, 2] * wz) * S[k, 0]
                oy = (R[k, 1, 0] * wx + R[k, 1, 1] * wy + R[k, 1, 2] * wz) * S[k, 1]
                oz = (R[k, 2, 0] * wx + R[k, 2, 1] * wy + R[k, 2, 2] * wz) * S[k, 2]
                wx = D[i, 0]; wy = D[i, 1]; wz = D[i, 2]
                dx = (R[k, 0, 0] * wx + R[k, 0, 1] * wy + R[k, 0, 2] * wz) * S[k, 0]
                dy = (R[k, 1, 0] * wx + R[k, 1, 1] * wy + R[k, 1, 2] * wz) * S[k, 1]
                dz = (R[k, 2, 0] * wx + R[k, 2, 1] * wy + R[k, 2, 2] * wz) * S[k, 2]

                cand = INFINITY
                qa = dx * dx + dy * dy
                if qa > 1e-18:
                    qb = 2.0 * (ox * dx + oy * dy)
                    qc = ox * ox + oy * oy - r * r
                    disc = qb * qb - 4.0 * qa * qc
                    if disc >= 0.0:
                        sqd = sqrt(disc)
                        for sgn in range(2):
                            t = (-qb - sqd) / (2.0 * qa) if sgn == 0 else (-qb + sqd) / (2.0 * qa)
                            z = oz + t * dz
                            if t > t_min and 0.0 <= z <= L and t < cand:
                                cand = t
                sa = dx * dx + dy * dy + dz * dz
                if sa > 1e-18:
                    for c in range(2):
                        cz = 0.0 if c == 0 else L
                        sb = 2.0 * (ox * dx + oy * dy + (oz - cz) * dz)
                        sc = ox * ox + oy * oy + (oz - cz) * (oz - cz) - r * r
                        disc = sb * sb - 4.0 * sa * sc
                        if disc >= 0.0:
                            sqd = sqrt(disc)
                            for sgn in range(2):
                                t = (-sb - sqd) / (2.0 * sa) if sgn == 0 else (-sb + sqd) / (2.0 * sa)
                                z = oz + t * dz
                                if t > t_min and t < cand and ((c == 0 and z < 0.0) or (c == 1 and z > L)):
                                    cand = t
                if cand < out_t[i]:
                    out_t[i] = cand
                    out_part[i] = k
                    hz = oz + cand * dz
                    hx = ox + cand * dx
                    hy = oy + cand * dy
                    z = hz / L if L > 1e-12 else 0.0
                    if z < 0.0:
                        z = 0.0
                    elif z > 1.0:
                        z = 1.0
                    out_s[i] = z
                    out_phi[i] = atan2(hy, hx)
    return out_t, out_part, out_s, out_phi
