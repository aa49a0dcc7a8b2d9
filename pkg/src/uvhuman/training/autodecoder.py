"""Joint auto-decoder training: fields, style mixer, density, latent bank.

One step renders a training frame through the cached-geometry path, mixes it
to full resolution, applies the weighted loss suite, and takes Adam steps on
the networks and on that frame's identity latent (so a latent only advances
when its identity is in the batch). Geometry is frozen per frame, which is
what makes 10k-step CPU runs feasible.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..body import build_body, nearest_faces
from ..fields import DensityParams, FieldConfig, init_field_params
from ..fields.blend import blend_core, box_memberships
from ..fields.density import sdf_to_density
from ..fields.window import box_coords
from ..latent.bank import LatentBank
from ..latent.ops import sample_uv
from ..numerics import save_arrays
from ..numerics.adam import Adam
from ..numerics.tensor import Tensor, grad
from ..renderer import frame_geometry, init_mixer_params, render_features, style_mix
from .discriminator import discriminate, init_discriminator
from .losses import (
    LossWeights,
    PerceptualProxy,
    adversarial_losses,
    downsample_area,
    loss_eikonal,
    loss_latent_l2,
    loss_latent_tv,
    loss_perceptual,
    loss_pixel,
    loss_vol,
)


class TrainingDiverged(RuntimeError):
    """Raised when a loss term stops being finite; names the term."""


class TrainConfig:
    def __init__(self, steps=15000, feature_res=16, n_samples=24,
                 latent_shape=(16, 16, 8), lr_net=1e-3, lr_latent=1e-2,
                 seed=0, workers=1, batch=1, eik_points=16, log_every=50,
                 checkpoint_every=0, psnr_every=0):
        self.steps = int(steps)
        self.feature_res = int(feature_res)
        self.n_samples = int(n_samples)
        self.latent_shape = tuple(int(s) for s in latent_shape)
        self.lr_net = float(lr_net)
        self.lr_latent = float(lr_latent)
        self.seed = int(seed)
        self.workers = int(workers)
        self.batch = int(batch) if batch else int(workers)
        self.eik_points = int(eik_points)
        self.log_every = int(log_every)
        self.checkpoint_every = int(checkpoint_every)
        self.psnr_every = int(psnr_every)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(self).items()}


class FrameContext:
    """One training frame with everything precomputed."""

    def __init__(self, ident, body, geom, gt, gt_down):
        self.ident = ident
        self.body = body
        self.geom = geom
        self.gt = gt
        self.gt_down = gt_down


def psnr(img, gt):
    mse = float(np.mean((np.asarray(img, dtype=np.float64) - gt) ** 2))
    return 10.0 * np.log10(1.0 / max(mse, 1e-12))


def _prepare_frames(manifest, config, wp=None):
    bodies = {s.ident: build_body(s.beta) for s in manifest.identities}
    res = config.feature_res
    frames = []
    for i, fr in enumerate(manifest.frames):
        body = bodies[fr.ident]
        cam = fr.camera.resize(res, res)
        geom = frame_geometry(body, fr.pose, cam, config.n_samples,
                              seed=config.seed * 100003 + i, wp=wp)
        gt = manifest.load_image(fr)
        gt_down = downsample_area(gt, res, res)
        frames.append(FrameContext(fr.ident, body, geom, gt, gt_down))
    return frames, bodies


def _eik_batch(body, rng, n):
    """Canonical points uniform over the part boxes, kept off the box faces."""
    k = rng.integers(0, body.part_boxes.shape[0], size=n)
    lo, hi = body.part_boxes[k, 0], body.part_boxes[k, 1]
    u = rng.uniform(0.1, 0.9, size=(n, 3))
    return lo + u * (hi - lo)


def frame_losses(params, cfg, fc, z, weights, proxy, rng, eik_points,
                 disc_params=None):
    """All generator-side loss terms for one frame -> (terms dict, total)."""
    alpha = DensityParams.raw_to_alpha(params["density/raw"])
    img = render_features(params, cfg, fc.body, None, None, z,
                          geom=fc.geom, alpha=alpha)
    rgb = style_mix(params, img.feature)

    terms = {}
    if weights.pix > 0:
        terms["pixel"] = loss_pixel(rgb, fc.gt)
    if weights.perc > 0:
        terms["perceptual"] = loss_perceptual(rgb, Tensor(fc.gt), proxy)
    if weights.vol > 0:
        terms["volume"] = loss_vol(img.feature, fc.gt_down)
    if weights.reg_l2 > 0:
        terms["latent_l2"] = loss_latent_l2(z)
    if weights.reg_tv > 0:
        terms["latent_tv"] = loss_latent_tv(z)
    if weights.eik > 0 and eik_points > 0:
        pts = _eik_batch(fc.body, rng, eik_points)
        hit = nearest_faces(fc.body, pts)
        z_pts = sample_uv(z, hit.uv[:, 0], hit.uv[:, 1])
        view = np.zeros((eik_points, 3))
        view[:, 2] = 1.0

        def dd_fn(p):
            coords, _, norm = box_memberships(fc.body, p)
            _, dd, _ = blend_core(params, cfg, coords, norm, z_pts, view,
                                  np.zeros(p.shape[0]))
            return dd

        terms["eikonal"] = loss_eikonal(dd_fn, pts)
    gen_adv = None
    if weights.adv > 0 and disc_params is not None:
        gen_adv, disc_term = adversarial_losses(
            lambda im: discriminate(disc_params, im), rgb, Tensor(fc.gt))
        terms["adversarial"] = gen_adv
        terms["_disc"] = disc_term

    lam = {"pixel": weights.pix, "perceptual": weights.perc,
           "volume": weights.vol, "latent_l2": weights.reg_l2,
           "latent_tv": weights.reg_tv, "eikonal": weights.eik,
           "adversarial": weights.adv}
    total = None
    for name, term in terms.items():
        if name == "_disc":
            continue
        piece = lam[name] * term
        total = piece if total is None else total + piece
    return terms, total, rgb


def train_autodecoder(manifest, out_dir, config=None, weights=None, wp=None,
                      field_cfg=None, latent_mode="2d", quiet=True):
    """Optimize fields, mixer, density, and per-identity latents on a dataset.

    latent_mode "2d" is the structured UV map; "1d" is the parameter-matched
    flat-vector baseline: each identity owns a U*V*C-entry vector mapped by a
    shared learned affine to a spatially constant conditioning map. Returns
    (params dict, LatentBank, history list). Writes `loss_log.csv`, periodic
    checkpoints, and a final `autodecoder.sldm` under out_dir.
    """
    if not manifest.identities:
        raise ValueError("cannot train on a dataset with zero identities")
    if latent_mode not in ("2d", "1d"):
        raise ValueError(f"latent_mode must be '2d' or '1d', got {latent_mode!r}")
    config = config or TrainConfig()
    weights = weights or LossWeights()
    os.makedirs(out_dir, exist_ok=True)

    u, v, c = config.latent_shape
    cfg = field_cfg or FieldConfig(z_channels=c)
    params = init_field_params(cfg, seed=config.seed)
    params.update(init_mixer_params(cfg, seed=config.seed + 1))
    params["density/raw"] = Tensor(np.asarray(DensityParams(0.1).raw),
                                   requires_grad=True)
    disc_params = init_discriminator(config.seed + 2) if weights.adv > 0 else None

    rng = np.random.default_rng(config.seed)
    latents = {}
    flat_dim = u * v * c
    for s in manifest.identities:
        if latent_mode == "1d":
            init = rng.normal(0.0, 0.01, size=flat_dim)
        else:
            init = rng.normal(0.0, 0.01, size=(u, v, c))
        latents[s.ident] = Tensor(init, requires_grad=True)
    ones_uv = np.ones((u, v, 1))
    if latent_mode == "1d":
        params["flat/w"] = Tensor(
            rng.uniform(-np.sqrt(6.0 / flat_dim), np.sqrt(6.0 / flat_dim),
                        size=(flat_dim, c)), requires_grad=True)
        params["flat/b"] = Tensor(np.zeros(c), requires_grad=True)

    def make_z(ident):
        leaf = latents[ident]
        if latent_mode == "1d":
            zc = leaf.reshape(1, flat_dim) @ params["flat/w"] + params["flat/b"]
            return zc.reshape(1, 1, c) * ones_uv, leaf
        return leaf, leaf

    frames, bodies = _prepare_frames(manifest, config, wp)
    proxy = PerceptualProxy(seed=config.seed + 3) if weights.perc > 0 else None

    adam_net = Adam(params, lr=config.lr_net)
    adam_lat = Adam({str(i): t for i, t in latents.items()}, lr=config.lr_latent)
    adam_disc = Adam(disc_params, lr=config.lr_net) if disc_params else None

    net_keys = list(params.keys())
    net_tensors = [params[k] for k in net_keys]
    history = []
    log_path = os.path.join(out_dir, "loss_log.csv")
    log_file = open(log_path, "w", newline="")
    log = csv.writer(log_file)
    log.writerow(["step"] + [t for t in ("pixel", "perceptual", "adversarial",
                                         "volume", "latent_l2", "latent_tv",
                                         "eikonal")] + ["total"])
    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    t_start = time.time()

    def one_frame(step, fc):
        frng = np.random.default_rng([config.seed, step, fc.ident])
        z, leaf = make_z(fc.ident)
        terms, total, _ = frame_losses(params, cfg, fc, z, weights, proxy,
                                       frng, config.eik_points, disc_params)
        for name, t in terms.items():
            if not np.all(np.isfinite(t.data)):
                raise TrainingDiverged(
                    f"loss term '{name.lstrip('_')}' became non-finite at step {step}")
        wrt = net_tensors + [leaf]
        gs = grad(total, wrt)
        d_gs = None
        if disc_params is not None and "_disc" in terms:
            d_gs = grad(terms["_disc"], [disc_params[k] for k in disc_params])
        return fc.ident, terms, float(total.data), gs, d_gs

    try:
        for step in range(config.steps):
            batch = [frames[(step * config.batch + j) % len(frames)]
                     for j in range(config.batch)]
            if pool is not None:
                results = list(pool.map(lambda fc: one_frame(step, fc), batch))
            else:
                results = [one_frame(step, fc) for fc in batch]

            net_g = None
            lat_g = {}
            total_val = 0.0
            terms_acc = {}
            for ident, terms, tval, gs, d_gs in results:
                gn = gs[: len(net_keys)]
                net_g = gn if net_g is None else [a + b for a, b in zip(net_g, gn)]
                zg = gs[len(net_keys)]
                key = str(ident)
                lat_g[key] = zg if key not in lat_g else lat_g[key] + zg
                total_val += tval / len(results)
                for nm, t in terms.items():
                    terms_acc[nm] = terms_acc.get(nm, 0.0) + float(np.mean(t.data)) / len(results)
                if d_gs is not None:
                    adam_disc.step({k: g for k, g in zip(disc_params, d_gs)})
            scale = 1.0 / len(results)
            adam_net.step({k: g * scale for k, g in zip(net_keys, net_g)})
            adam_lat.step(lat_g)

            if step % config.log_every == 0 or step == config.steps - 1:
                row = [step] + [f"{terms_acc.get(nm, 0.0):.6g}" for nm in
                                ("pixel", "perceptual", "adversarial", "volume",
                                 "latent_l2", "latent_tv", "eikonal")] + [f"{total_val:.6g}"]
                log.writerow(row)
                log_file.flush()
                history.append({"step": step, "total": total_val, **{
                    k: v for k, v in terms_acc.items() if not k.startswith("_")}})
                if not quiet:
                    print(f"step {step}: total {total_val:.5f} "
                          f"({time.time() - t_start:.0f}s)")
            if config.checkpoint_every and step and step % config.checkpoint_every == 0:
                _save(out_dir, f"checkpoint_{step:06d}.sldm", params, latents, config)
    finally:
        log_file.close()
        if pool is not None:
            pool.shutdown()

    bank = LatentBank((u, v, c))
    for ident in latents:
        z, _ = make_z(ident)
        bank.add(ident, z.data.astype(np.float32))
    _save(out_dir, "autodecoder.sldm", params, latents, config)
    bank.save(os.path.join(out_dir, "bank.sldm"))
    return params, bank, history


def _save(out_dir, name, params, latents, config):
    arrays = {k: np.asarray(p.data) for k, p in params.items()}
    for ident, t in latents.items():
        arrays[f"latent/{ident}"] = np.asarray(t.data, dtype=np.float32)
    save_arrays(os.path.join(out_dir, name), arrays)


def load_decoder(path, cfg=None):
    """Load a trained decoder checkpoint back into (params, latents)."""
    from ..numerics import load_arrays
    arrays = load_arrays(path)
    params = {}
    latents = {}
    for k, arr in arrays.items():
        if k.startswith("latent/"):
            latents[k.split("/", 1)[1]] = arr
        else:
            params[k] = Tensor(arr, requires_grad=True, dtype=arr.dtype)
    return params, latents


def evaluate_recon(params, cfg, manifest, bank, config, wp=None, frames=None):
    """Reconstruction metrics over (a subset of) training frames.

    Returns (mean per-pixel L1 error, mean PSNR in dB) across the frames,
    rendered through the same cached-geometry path as training.
    """
    alpha = DensityParams.raw_to_alpha(
        params["density/raw"]) if "density/raw" in params else 0.1
    if isinstance(alpha, Tensor):
        alpha = float(alpha.data)
    bodies = {s.ident: build_body(s.beta) for s in manifest.identities}
    l1s, psnrs = [], []
    use = frames if frames is not None else range(len(manifest.frames))
    for i in use:
        fr = manifest.frames[i]
        body = bodies[fr.ident]
        res = config.feature_res
        cam = fr.camera.resize(res, res)
        geom = frame_geometry(body, fr.pose, cam, config.n_samples,
                              seed=config.seed * 100003 + i, wp=wp)
        z = Tensor(bank.get(fr.ident))
        img = render_features(params, cfg, body, fr.pose, cam, z, geom=geom,
                              alpha=alpha)
        rgb = style_mix(params, img.feature)
        gt = manifest.load_image(fr)
        l1s.append(float(np.mean(np.abs(np.asarray(rgb.data, np.float64) - gt))))
        psnrs.append(psnr(rgb.data, gt))
    return float(np.mean(l1s)), float(np.mean(psnrs))


def evaluate_psnr(params, cfg, manifest, bank, config, wp=None, frames=None):
    """Mean reconstruction PSNR over (a subset of) training frames."""
    return evaluate_recon(params, cfg, manifest, bank, config, wp, frames)[1]
