"""Procedural articulated humanoid: 16 capsule parts, one bone each.

The template is built in a canonical T-pose. Coordinates: z up, y forward,
x toward the body's right. All dimensions are fractions of a unit height,
scaled so the default body is exactly 1.7 m tall (top of head to sole).

Shape parameters are per-part (length, radius) multipliers. The length
multiplier scales a part along its bone axis including the end caps, so a
part's bounding-box extent along the axis scales exactly linearly with it;
the radius multiplier scales the two perpendicular axes.
"""

from __future__ import annotations

import numpy as np

HEIGHT = 1.7
N_PARTS = 16

PART_NAMES = [
    "head", "shoulder_spine", "mid_spine", "lower_spine",
    "r_upper_arm", "r_arm", "r_hand",
    "l_upper_arm", "l_arm", "l_hand",
    "r_upper_leg", "r_leg", "r_foot",
    "l_upper_leg", "l_leg", "l_foot",
]

PARENTS = [1, 2, 3, -1, 1, 4, 5, 1, 7, 8, 3, 10, 11, 3, 13, 14]

# per part: bone direction (unit), length, radius, offset of the bone head
# from the parent's bone head (root: absolute position). Unit-height units.
_DIRS = {
    "head": (0, 0, 1), "shoulder_spine": (0, 0, 1),
    "mid_spine": (0, 0, 1), "lower_spine": (0, 0, 1),
    "r_upper_arm": (1, 0, 0), "r_arm": (1, 0, 0), "r_hand": (1, 0, 0),
    "l_upper_arm": (-1, 0, 0), "l_arm": (-1, 0, 0), "l_hand": (-1, 0, 0),
    "r_upper_leg": (0, 0, -1), "r_leg": (0, 0, -1), "r_foot": (0, 1, 0),
    "l_upper_leg": (0, 0, -1), "l_leg": (0, 0, -1), "l_foot": (0, 1, 0),
}
_LENGTHS = {
    "head": 0.10, "shoulder_spine": 0.10, "mid_spine": 0.10,
    "lower_spine": 0.10,
    "r_upper_arm": 0.19, "r_arm": 0.18, "r_hand": 0.10,
    "l_upper_arm": 0.19, "l_arm": 0.18, "l_hand": 0.10,
    "r_upper_leg": 0.23, "r_leg": 0.23, "r_foot": 0.12,
    "l_upper_leg": 0.23, "l_leg": 0.23, "l_foot": 0.12,
}
_RADII = {
    "head": 0.060, "shoulder_spine": 0.080, "mid_spine": 0.082,
    "lower_spine": 0.088,
    "r_upper_arm": 0.042, "r_arm": 0.034, "r_hand": 0.028,
    "l_upper_arm": 0.042, "l_arm": 0.034, "l_hand": 0.028,
    "r_upper_leg": 0.056, "r_leg": 0.040, "r_foot": 0.045,
    "l_upper_leg": 0.056, "l_leg": 0.040, "l_foot": 0.045,
}
_OFFSETS = {
    "lower_spine": (0.0, 0.0, 0.52),       # root, absolute pelvis height
    "mid_spine": (0.0, 0.0, 0.10),
    "shoulder_spine": (0.0, 0.0, 0.10),
    "head": (0.0, 0.0, 0.12),
    "r_upper_arm": (0.14, 0.0, 0.06), "l_upper_arm": (-0.14, 0.0, 0.06),
    "r_arm": (0.19, 0.0, 0.0), "l_arm": (-0.19, 0.0, 0.0),
    "r_hand": (0.18, 0.0, 0.0), "l_hand": (-0.18, 0.0, 0.0),
    "r_upper_leg": (0.065, 0.0, 0.0), "l_upper_leg": (-0.065, 0.0, 0.0),
    "r_leg": (0.0, 0.0, -0.23), "l_leg": (0.0, 0.0, -0.23),
    "r_foot": (0.0, -0.02, -0.245), "l_foot": (0.0, -0.02, -0.245),
}

# uv atlas: per-part chart rectangle (u0, v0, u1, v1), pairwise disjoint.
# Central head-spine-pelvis chain shares one u column; limb chains get
# their own columns so each kinematic chain reads top-to-bottom in v.
UV_CHARTS = {
    "head": (0.41, 0.80, 0.59, 0.98),
    "shoulder_spine": (0.41, 0.62, 0.59, 0.79),
    "mid_spine": (0.41, 0.50, 0.59, 0.61),
    "lower_spine": (0.41, 0.38, 0.59, 0.49),
    "r_upper_arm": (0.86, 0.62, 0.98, 0.79),
    "r_arm": (0.86, 0.44, 0.98, 0.61),
    "r_hand": (0.86, 0.26, 0.98, 0.43),
    "l_upper_arm": (0.02, 0.62, 0.14, 0.79),
    "l_arm": (0.02, 0.44, 0.14, 0.61),
    "l_hand": (0.02, 0.26, 0.14, 0.43),
    "r_upper_leg": (0.60, 0.26, 0.72, 0.37),
    "r_leg": (0.60, 0.14, 0.72, 0.25),
    "r_foot": (0.60, 0.02, 0.72, 0.13),
    "l_upper_leg": (0.28, 0.26, 0.40, 0.37),
    "l_leg": (0.28, 0.14, 0.40, 0.25),
    "l_foot": (0.28, 0.02, 0.40, 0.13),
}

# charts whose v axis is flipped so that v still increases toward the head
# end of the kinematic chain that hangs downward
_V_FLIP = {"r_upper_leg", "r_leg", "l_upper_leg", "l_leg"}

BOX_INFLATE = 0.15       # part boxes grow 15% about their center
BLEND_FRAC = 0.25        # fraction of bone length that blends to the parent


class ShapeParams:
    """Per-part (length, radius) multipliers, each clamped-checked to [0.5, 2]."""

    def __init__(self, length=None, radius=None):
        self.length = np.ones(N_PARTS) if length is None else np.asarray(length, dtype=np.float64)
        self.radius = np.ones(N_PARTS) if radius is None else np.asarray(radius, dtype=np.float64)
        for arr, what in ((self.length, "length"), (self.radius, "radius")):
            if arr.shape != (N_PARTS,):
                raise ValueError(f"shape {what} multipliers must be ({N_PARTS},), got {arr.shape}")
            if np.any(arr < 0.5) or np.any(arr > 2.0):
                raise ValueError(f"shape {what} multipliers must lie in [0.5, 2.0]")

    @staticmethod
    def from_vector(vec):
        vec = np.asarray(vec, dtype=np.float64).reshape(2, N_PARTS)
        return ShapeParams(length=vec[0], radius=vec[1])

    def to_vector(self):
        return np.concatenate([self.length, self.radius])


def _perp_frame(d):
    # orthonormal (u1, u2) with u2 = d x u1; u1 chosen deterministically
    d = np.asarray(d, dtype=np.float64)
    if abs(d[2]) > 0.9:
        u1 = np.array([1.0, 0.0, 0.0])
    else:
        u1 = np.cross(d, [0.0, 0.0, 1.0])
        u1 /= np.linalg.norm(u1)
    u2 = np.cross(d, u1)
    return u1, u2


def _profile(length, radius, ns):
    """Stations along a capsule profile: (axial, radial, arc) triples.

    Runs bottom pole -> bottom cap -> cylinder -> top cap -> top pole.
    axial is measured from the bone head along the axis; arc is cumulative
    arc length along the profile (used for the chart v coordinate).
    """
    nc = max(2, ns // 4)
    nl = max(2, min(8, int(round(length / radius))))
    stations = [(-radius, 0.0, 0.0)]
    for i in range(1, nc + 1):
        a = 0.5 * np.pi * i / nc
        stations.append((-radius * np.cos(a), radius * np.sin(a), radius * a))
    base = radius * 0.5 * np.pi
    for j in range(1, nl + 1):
        stations.append((length * j / nl, radius, base + length * j / nl))
    base += length
    for i in range(1, nc):
        a = 0.5 * np.pi * i / nc
        stations.append((length + radius * np.sin(a), radius * np.cos(a), base + radius * a))
    stations.append((length + radius, 0.0, base + radius * 0.5 * np.pi))
    return stations


def _capsule_mesh(head, d, length, radius, len_scale, rad_scale, chart, flip_v, ns):
    """Vertices, faces, and uv for one scaled capsule part.

    ns is the segment count around the axis and must be a multiple of 4 so
    the extreme circumferential directions land exactly on vertices.
    """
    u1, u2 = _perp_frame(d)
    d = np.asarray(d, dtype=np.float64)
    u0c, v0c, u1c, v1c = chart
    stations = _profile(length, radius, ns)
    total_arc = stations[-1][2]

    verts, uvs = [], []
    phis = 2.0 * np.pi * np.arange(ns + 1) / ns
    ring_dirs = np.outer(np.cos(phis), u1) + np.outer(np.sin(phis), u2)   # (ns+1, 3)
    us = u0c + (phis / (2.0 * np.pi)) * (u1c - u0c)

    ring_start = []
    for axial, radial, arc in stations:
        v = arc / total_arc
        if flip_v:
            v = 1.0 - v
        v = v0c + v * (v1c - v0c)
        if radial == 0.0:
            ring_start.append(len(verts))
            verts.append(head + (axial * len_scale) * d)
            uvs.append((0.5 * (u0c + u1c), v))
        else:
            ring_start.append(len(verts))
            ring = head + (axial * len_scale) * d + (radial * rad_scale) * ring_dirs
            verts.extend(ring)
            uvs.extend(np.stack([us, np.full(ns + 1, v)], axis=1))

    faces = []
    # bottom fan
    p0 = ring_start[0]
    r0 = ring_start[1]
    for c in range(ns):
        faces.append((p0, r0 + c + 1, r0 + c))
    # quad strips between consecutive full rings
    for s in range(1, len(stations) - 2):
        ra, rb = ring_start[s], ring_start[s + 1]
        for c in range(ns):
            faces.append((ra + c, ra + c + 1, rb + c + 1))
            faces.append((ra + c, rb + c + 1, rb + c))
    # top fan
    pt = ring_start[-1]
    rt = ring_start[-2]
    for c in range(ns):
        faces.append((pt, rt + c, rt + c + 1))

    verts = np.asarray(verts, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    uvs = np.asarray(uvs, dtype=np.float64)

    # orient every face outward (normal away from the scaled axis segment)
    tri = verts[faces]                                    # (F, 3, 3)
    cen = tri.mean(axis=1)
    nrm = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    t = np.clip(((cen - head) @ d) / max(length * len_scale, 1e-12), 0.0, 1.0)
    on_axis = head + np.outer(t * length * len_scale, d)
    flip = np.einsum("fd,fd->f", nrm, cen - on_axis) < 0.0
    faces[flip] = faces[flip][:, ::-1]

    # axial station coordinate per vertex, for skin-weight blending
    axial = np.array([s[0] for s in stations])
    counts = [1 if s[1] == 0.0 else ns + 1 for s in stations]
    vert_axial = np.repeat(axial, counts)
    return verts, faces, uvs, vert_axial


class TemplateBody:
    """Canonical-pose body mesh plus everything queries need.

    Faces are stored grouped by part (ascending part index), so global face
    order equals (part, local face) order. part_boxes are axis-aligned over
    each part's vertices, inflated about the center.
    """

    def __init__(self, beta=None, resolution=8):
        if beta is None:
            beta = ShapeParams()
        ns = max(4, int(resolution))
        ns += (-ns) % 4          # snap to a multiple of 4
        self.beta = beta
        self.resolution = ns

        joints = np.zeros((N_PARTS, 3))
        order = _topo_order()
        for k in order:
            name = PART_NAMES[k]
            off = np.asarray(_OFFSETS[name], dtype=np.float64) * HEIGHT
            p = PARENTS[k]
            if p < 0:
                joints[k] = off
            else:
                pd = np.asarray(_DIRS[PART_NAMES[p]], dtype=np.float64)
                ax = (off @ pd) * pd
                joints[k] = joints[p] + ax * beta.length[p] + (off - ax) * beta.radius[p]

        self.joints = joints
        self.axes = np.array([_DIRS[n] for n in PART_NAMES], dtype=np.float64)
        self.len_base = np.array([_LENGTHS[n] for n in PART_NAMES]) * HEIGHT
        self.rad_base = np.array([_RADII[n] for n in PART_NAMES]) * HEIGHT
        self.lengths = self.len_base * beta.length     # world axial extents
        self.radii = self.rad_base * beta.radius       # world radial extents
        self.parents = np.array(PARENTS, dtype=np.int64)

        verts, faces, uvs, weights = [], [], [], []
        part_of_vertex, part_of_face = [], []
        self.face_start = np.zeros(N_PARTS + 1, dtype=np.int64)
        base = 0
        for k, name in enumerate(PART_NAMES):
            v, f, uv, ax = _capsule_mesh(
                joints[k], self.axes[k], _LENGTHS[name] * HEIGHT,
                _RADII[name] * HEIGHT, beta.length[k], beta.radius[k],
                UV_CHARTS[name], name in _V_FLIP, ns)
            w = np.zeros((len(v), N_PARTS))
            p = PARENTS[k]
            if p >= 0:
                wp = 0.5 * np.clip(1.0 - ax / (BLEND_FRAC * _LENGTHS[name] * HEIGHT), 0.0, 1.0)
                w[:, p] = wp
                w[:, k] = 1.0 - wp
            else:
                w[:, k] = 1.0
            verts.append(v)
            faces.append(f + base)
            uvs.append(uv)
            weights.append(w)
            part_of_vertex.append(np.full(len(v), k, dtype=np.int64))
            part_of_face.append(np.full(len(f), k, dtype=np.int64))
            base += len(v)
            self.face_start[k + 1] = self.face_start[k] + len(f)

        self.vertices = np.concatenate(verts)          # (V, 3)
        self.faces = np.concatenate(faces)             # (F, 3)
        self.uv = np.concatenate(uvs)                  # (V, 2)
        self.skin_weights = np.concatenate(weights)    # (V, 16)
        self.part_of_vertex = np.concatenate(part_of_vertex)
        self.part_of_face = np.concatenate(part_of_face)

        boxes = np.zeros((N_PARTS, 2, 3))
        for k in range(N_PARTS):
            pv = self.vertices[self.part_of_vertex == k]
            lo, hi = pv.min(axis=0), pv.max(axis=0)
            c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
            boxes[k, 0] = c - h * (1.0 + BOX_INFLATE)
            boxes[k, 1] = c + h * (1.0 + BOX_INFLATE)
        self.part_boxes = boxes

        # tight per-part vertex bounds (no inflation) for query pruning
        self._tight_boxes = np.zeros((N_PARTS, 2, 3))
        for k in range(N_PARTS):
            pv = self.vertices[self.part_of_vertex == k]
            self._tight_boxes[k, 0] = pv.min(axis=0)
            self._tight_boxes[k, 1] = pv.max(axis=0)

        # per-part orthonormal frame, rows (u1, u2, axis); maps world offsets
        # into local coords with z along the bone
        frames = np.zeros((N_PARTS, 3, 3))
        for k in range(N_PARTS):
            u1, u2 = _perp_frame(self.axes[k])
            frames[k] = np.stack([u1, u2, self.axes[k]])
        self.frames = frames

        # upper bound on the deviation of any mesh facet from its part's
        # (scaled) capsule surface: worst-case two-direction sagitta with a
        # 1.5x safety factor. Used to keep the pruned nearest-face query exact.
        nc = max(2, ns // 4)
        sag = 1.0 - np.cos(np.pi / ns) * np.cos(np.pi / (4 * nc))
        scale = np.maximum(beta.length, beta.radius)
        self.chord_bound = 1.5 * float((self.rad_base * scale).max() * sag)

        self.face_uv = self.uv[self.faces]             # (F, 3, 2)
        self.tri = self.vertices[self.faces]           # (F, 3, 3)
        n = np.cross(self.tri[:, 1] - self.tri[:, 0], self.tri[:, 2] - self.tri[:, 0])
        self.face_normals = n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-30)

    def height(self):
        return float(self.vertices[:, 2].max() - self.vertices[:, 2].min())


def _topo_order():
    order, seen = [], set()

    def visit(k):
        if k in seen:
            return
        if PARENTS[k] >= 0:
            visit(PARENTS[k])
        seen.add(k)
        order.append(k)

    for k in range(N_PARTS):
        visit(k)
    return order


def build_body(beta=None, resolution=8):
    """Construct the canonical template body."""
    return TemplateBody(beta=beta, resolution=resolution)


def export_obj(body, path, sidecar=None):
    """Write the template mesh as OBJ (v / vt / f with uv indices).

    Optionally writes a sidecar text file mapping each face line to its
    1-based part id, one integer per line.
    """
    lines = []
    for v in body.vertices:
        lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
    for t in body.uv:
        lines.append(f"vt {t[0]:.6f} {t[1]:.6f}")
    for f in body.faces:
        a, b, c = (int(i) + 1 for i in f)
        lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if sidecar is not None:
        with open(sidecar, "w") as fh:
            fh.write("\n".join(str(int(p) + 1) for p in body.part_of_face) + "\n")
