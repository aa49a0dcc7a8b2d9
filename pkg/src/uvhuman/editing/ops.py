"""Latent-space editing: part composition, swapping, and style transfer.

All edits are pure functions from latents (plus configs) to latents. Spatial
edits splice texels by part ownership on the UV grid; the optional refinement
pass re-noises the spliced map a few steps and denoises it with the kept
region anchored, which is what removes seams at part boundaries.
"""

from __future__ import annotations

import numpy as np

from ..body.humanoid import N_PARTS
from ..diffusion.sampling import diff_render
from ..latent.masks import edit_mask
from ..latent.ops import blend_parts


def _check_parts(parts):
    out = [int(p) for p in parts]
    for p in out:
        if not 0 <= p < N_PARTS:
            raise ValueError(f"part index {p} out of range [0, {N_PARTS})")
    return out


def swap_part(z_target, z_source, parts):
    """Replace the texels owned by `parts` in z_target with z_source's.

    Binary ownership masks make this exact: swapped texels are bitwise the
    source's, untouched texels bitwise the target's, so swapping back with
    the original target restores it exactly.
    """
    z_target = np.asarray(z_target)
    parts = _check_parts(parts)
    m = edit_mask(z_target.shape[0], z_target.shape[1], parts)
    return blend_parts(z_target, z_source, m).astype(z_target.dtype)


def compose(sources, base=None, denoise_fn=None, schedule=None, steps=0,
            eta=0.0, lam=0.5, protect=None, stats=None, seed=0):
    """Assemble one latent from per-part pieces of several, optionally refined.

    sources is a list of (latent, parts) pairs; each of the 16 parts may be
    claimed by at most one source. Unclaimed texels come from `base`
    (default: the elementwise mean of the source latents, which keeps the
    result independent of source ordering). When `steps` > 0 a denoiser and
    schedule must be given: the composite is re-noised `steps` steps and
    denoised with the texels of `protect` (a source index, or an explicit
    part list) anchored to the composite, so only the rest is repainted.

    Returns (latent, mask) where mask is the (U, V) free-region indicator
    passed to the refiner (all-ones when nothing is protected).
    """
    if not sources:
        raise ValueError("compose needs at least one (latent, parts) source")
    zs = [np.asarray(z) for z, _ in sources]
    shape = zs[0].shape
    for z in zs[1:]:
        if z.shape != shape:
            raise ValueError(f"latent shapes differ: {z.shape} vs {shape}")
    claimed = {}
    part_sets = []
    for i, (_, parts) in enumerate(sources):
        parts = _check_parts(parts)
        for p in parts:
            if p in claimed:
                raise ValueError(
                    f"part {p} claimed by sources {claimed[p]} and {i}")
            claimed[p] = i
        part_sets.append(parts)

    if base is None:
        out = np.mean(zs, axis=0)
    else:
        out = np.array(base, dtype=zs[0].dtype)
        if out.shape != shape:
            raise ValueError(f"base shape {out.shape} != latent shape {shape}")
    for z, parts in zip(zs, part_sets):
        if parts:
            out = blend_parts(out, z, edit_mask(shape[0], shape[1], parts))
    out = out.astype(zs[0].dtype)

    mask = np.ones(shape[:2], dtype=np.float32)
    if protect is not None:
        if np.isscalar(protect):
            kept = part_sets[int(protect)]
        else:
            kept = _check_parts(protect)
        mask = 1.0 - edit_mask(shape[0], shape[1], kept)
    if steps > 0:
        if denoise_fn is None or schedule is None:
            raise ValueError("refinement (steps > 0) needs denoise_fn and schedule")
        out = diff_render(denoise_fn, schedule, out, steps=steps, eta=eta,
                          seed=seed, mask=mask, y0=out, lam=lam, stats=stats)
    return out, mask


def transfer_style(z_colors, z_geometry, denoise_fn=None, schedule=None,
                   steps=0, eta=0.0, seed=0, stats=None):
    """Carry one latent's palette onto another's geometry.

    The first half of the channels conditions the color pathway of the local
    fields and the second half the shape pathway, so the recombination takes
    channels [:C/2] from z_colors and [C/2:] from z_geometry. An optional
    whole-map refinement pass (mask all-free) settles the recombined map
    back onto the learned manifold.
    """
    z_colors = np.asarray(z_colors)
    z_geometry = np.asarray(z_geometry)
    if z_colors.shape != z_geometry.shape:
        raise ValueError(
            f"latent shapes differ: {z_colors.shape} vs {z_geometry.shape}")
    c = z_colors.shape[2]
    out = z_geometry.copy()
    out[:, :, : c // 2] = z_colors[:, :, : c // 2]
    if steps > 0:
        if denoise_fn is None or schedule is None:
            raise ValueError("refinement (steps > 0) needs denoise_fn and schedule")
        out = diff_render(denoise_fn, schedule, out, steps=steps, eta=eta,
                          seed=seed, stats=stats)
    return out
