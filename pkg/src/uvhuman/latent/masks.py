"""Rasterized part masks on the latent UV grid.

A texel belongs to a part when its center falls inside that part's chart
rectangle; charts are pairwise disjoint so labels are unambiguous.
"""

from __future__ import annotations

import numpy as np

from ..body.humanoid import PART_NAMES, UV_CHARTS


def chart_label_map(u_res, v_res):
    """(U, V) int64 map of part indices, -1 between charts."""
    uc = (np.arange(u_res) + 0.5) / u_res
    vc = (np.arange(v_res) + 0.5) / v_res
    label = np.full((u_res, v_res), -1, dtype=np.int64)
    for k, name in enumerate(PART_NAMES):
        u0, v0, u1, v1 = UV_CHARTS[name]
        mu = (uc >= u0) & (uc < u1)
        mv = (vc >= v0) & (vc < v1)
        label[np.ix_(mu, mv)] = k
    return label


def owner_label_map(u_res, v_res):
    """(U, V) int64 map assigning *every* texel to a part.

    Texels inside a chart keep that chart's label; texels in the gutter
    between charts go to the part whose chart rectangle is nearest (ties to
    the lower part index). Unlike chart_label_map there is no -1: the owner
    masks of the 16 parts tile the grid, so editing a set of parts also moves
    the gutter texels its bilinear taps read.
    """
    uc = (np.arange(u_res) + 0.5) / u_res
    vc = (np.arange(v_res) + 0.5) / v_res
    uu, vv = np.meshgrid(uc, vc, indexing="ij")
    best = np.full((u_res, v_res), np.inf)
    label = np.zeros((u_res, v_res), dtype=np.int64)
    for k, name in enumerate(PART_NAMES):
        u0, v0, u1, v1 = UV_CHARTS[name]
        du = np.maximum(np.maximum(u0 - uu, uu - u1), 0.0)
        dv = np.maximum(np.maximum(v0 - vv, vv - v1), 0.0)
        d = du * du + dv * dv
        closer = d < best
        label[closer] = k
        best = np.where(closer, d, best)
    return label


def edit_mask(u_res, v_res, parts):
    """(U, V) float32 indicator of the texels *owned* by the given parts.

    Owner masks partition the grid: disjoint part sets give disjoint masks
    and the union over all 16 parts is all-ones.
    """
    label = owner_label_map(u_res, v_res)
    m = np.zeros((u_res, v_res), dtype=np.float32)
    for p in parts:
        if not 0 <= int(p) < len(PART_NAMES):
            raise ValueError(f"part index {p} out of range [0, {len(PART_NAMES)})")
        m = np.maximum(m, (label == int(p)).astype(np.float32))
    return m


def part_mask(u_res, v_res, part):
    """(U, V) float32 indicator of one part's chart texels."""
    if not 0 <= int(part) < len(PART_NAMES):
        raise ValueError(f"part index {part} out of range [0, {len(PART_NAMES)})")
    return (chart_label_map(u_res, v_res) == int(part)).astype(np.float32)


def parts_mask(u_res, v_res, parts):
    """(U, V) float32 indicator of the union of several parts' texels."""
    label = chart_label_map(u_res, v_res)
    m = np.zeros((u_res, v_res), dtype=np.float32)
    for p in parts:
        if not 0 <= int(p) < len(PART_NAMES):
            raise ValueError(f"part index {p} out of range [0, {len(PART_NAMES)})")
        m = np.maximum(m, (label == int(p)).astype(np.float32))
    return m


def dilate_mask(mask, steps=1):
    """Binary dilation with a 3x3 structuring element, `steps` times."""
    m = np.asarray(mask) > 0.5
    for _ in range(int(steps)):
        grown = m.copy()
        grown[1:, :] |= m[:-1, :]
        grown[:-1, :] |= m[1:, :]
        grown[:, 1:] |= m[:, :-1]
        grown[:, :-1] |= m[:, 1:]
        grown[1:, 1:] |= m[:-1, :-1]
        grown[1:, :-1] |= m[:-1, 1:]
        grown[:-1, 1:] |= m[1:, :-1]
        grown[:-1, :-1] |= m[1:, 1:]
        m = grown
    return m.astype(np.float32)
