"""Pipeline driver: every stage as a subcommand of one executable.

Settings resolve in three layers: built-in defaults, then a key=value config
file (--config), then explicit flags. Unknown keys are rejected at both flag
and file level. Every run writes the merged settings to `<out>/resolved.cfg`,
which is itself a valid --config file, so any run can be repeated exactly.

Exit codes: 0 success, 1 usage error (bad flags, unknown keys, missing
inputs), 2 runtime failure (divergence, non-finite results, I/O mid-run).
"""

from __future__ import annotations

import csv
import json
import os
import sys

import numpy as np

from .body import ShapeParams, SkeletonPose, build_body, ring_camera
from .dataio import DatasetManifest, generate_dataset, sample_pose, save_png, write_pfm
from .diffusion import (DenoiserConfig, NoiseSchedule, ddim_sample, denoise,
                        load_diffusion, save_diffusion, train_diffusion)
from .editing import (EditSpec, InversionConfig, bank_mean, invert, run_edits)
from .fields import DensityParams, FieldConfig
from .latent import LatentBank, NormStats
from .latent.normstats import MODES
from .numerics.gradcheck import check_all_ops
from .numerics.tensor import Tensor, grad, precision
from .renderer import frame_geometry, render_features, render_normal_depth, style_mix
from .training import LossWeights, TrainConfig, evaluate_recon, load_decoder, psnr, train_autodecoder

GRAD_TOL = 1e-3


class UsageError(Exception):
    """Bad invocation: wrong flags, unknown keys, or missing input files."""


# ---------------------------------------------------------------- settings

def _bool(s):
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _ints(s):
    """Comma-separated integer list; empty string -> empty list."""
    s = str(s).strip()
    return [int(x) for x in s.split(",")] if s else []


def _shape3(s):
    vals = _ints(s)
    if len(vals) != 3:
        raise ValueError(f"expected U,V,C with three entries, got {s!r}")
    return vals


_WEIGHT_KEYS = {
    "w_pix": (float, 1.0), "w_perc": (float, 0.1), "w_adv": (float, 0.0),
    "w_vol": (float, 0.5), "w_l2": (float, 1e-4), "w_tv": (float, 1e-4),
    "w_eik": (float, 0.01),
}


def _weights(cfg):
    return LossWeights(pix=cfg["w_pix"], perc=cfg["w_perc"], adv=cfg["w_adv"],
                       vol=cfg["w_vol"], reg_l2=cfg["w_l2"],
                       reg_tv=cfg["w_tv"], eik=cfg["w_eik"])


# Per-subcommand setting tables: key -> (converter, default). Keys listed in
# "inputs" must point at existing files; every table implicitly gains
# seed/out.
COMMANDS = {}


def _command(name, keys, inputs=()):
    keys = dict(keys)
    keys.setdefault("seed", (int, 0))
    keys.setdefault("out", (str, os.path.join("runs", name)))

    def wrap(fn):
        COMMANDS[name] = {"keys": keys, "inputs": tuple(inputs), "run": fn}
        return fn
    return wrap


def _parse_config_file(path, known):
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            key = key.strip()
            if key not in known:
                raise UsageError(f"{path}:{ln}: unknown key '{key}'; "
                                 f"known keys: {', '.join(sorted(known))}")
            out[key] = val.strip()
    return out


def _resolve(name, argv):
    """Merge defaults, config file, and flags -> settings dict."""
    spec = COMMANDS[name]
    keys = spec["keys"]
    flags = {}
    config_path = None
    i = 0
    while i < len(argv):
        arg = argv[i]
        if not arg.startswith("--"):
            raise UsageError(f"unexpected argument {arg!r}")
        key = arg[2:].replace("-", "_")
        if key == "lambda":
            key = "lam"
        if i + 1 >= len(argv):
            raise UsageError(f"flag {arg} needs a value")
        val = argv[i + 1]
        i += 2
        if key == "config":
            config_path = val
            continue
        if key not in keys:
            raise UsageError(f"unknown flag {arg} for '{name}'; known: "
                             + ", ".join("--" + k.replace("_", "-") for k in sorted(keys)))
        flags[key] = val

    merged = {k: dflt for k, (_, dflt) in keys.items()}
    layers = []
    if config_path:
        layers.append(_parse_config_file(config_path, set(keys)))
    layers.append(flags)
    for layer in layers:
        for k, v in layer.items():
            conv = keys[k][0]
            try:
                merged[k] = conv(v)
            except (ValueError, TypeError) as e:
                raise UsageError(f"bad value for '{k}': {e}")
    return merged


def _snapshot(name, cfg):
    os.makedirs(cfg["out"], exist_ok=True)
    lines = [f"# uvhuman {name}"]
    for k in sorted(cfg):
        v = cfg[k]
        if isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k}={v}")
    with open(os.path.join(cfg["out"], "resolved.cfg"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _check_inputs(name, cfg):
    for key in COMMANDS[name]["inputs"]:
        path = cfg[key]
        if not path:
            raise UsageError(f"'{name}' needs --{key.replace('_', '-')}")
        if not os.path.exists(path):
            raise UsageError(f"--{key.replace('_', '-')}: no such path: {path}")


# ------------------------------------------------------------ small helpers

def _decoder_setup(decoder_path, bank_path):
    """Load a trained decoder + bank -> (params, FieldConfig, bank, alpha)."""
    params, _ = load_decoder(decoder_path)
    bank = LatentBank.load(bank_path)
    cfg = FieldConfig(z_channels=bank.shape[2])
    alpha = 0.1
    if "density/raw" in params:
        alpha = float(DensityParams.raw_to_alpha(params["density/raw"]).data)
    return params, cfg, bank, alpha


def _render_latent(params, cfg, body, pose, cam, z, n_samples, alpha, seed=0):
    geom = frame_geometry(body, pose, cam, n_samples, seed=seed)
    img = render_features(params, cfg, body, None, None, Tensor(np.asarray(z)),
                          geom=geom, alpha=alpha)
    return np.asarray(style_mix(params, img.feature).data)


def _diffusion_fn(model_path):
    params, stats, schedule, dcfg = load_diffusion(model_path)
    return (lambda z_t, t: denoise(params, z_t, t, dcfg)), stats, schedule, dcfg


def render_gradcheck(seed=0, texels=6, h=1e-3):
    """Finite-difference check of the end-to-end render loss wrt the latent.

    Renders a small frame in float64, takes the mean absolute error against
    a fixed random target as the loss, and compares the reverse-mode latent
    gradient with central differences on a few texel channels. Returns the
    max relative error.
    """
    from .fields import init_field_params
    from .renderer import init_mixer_params
    from .training.losses import loss_pixel

    rng = np.random.default_rng(seed)
    with precision("float64"):
        cfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
        params = init_field_params(cfg, seed=seed)
        params.update(init_mixer_params(cfg, seed=seed + 1))
        body = build_body(ShapeParams())
        cam = ring_camera(0, 4, width=8, img_height=8)
        geom = frame_geometry(body, SkeletonPose.identity(), cam, 6, seed=seed)
        target = rng.uniform(0.0, 1.0, size=(32, 32, 3))
        z0 = rng.normal(0.0, 0.05, size=(6, 6, 4))

        def loss_of(z_arr, want_grad=False):
            z = Tensor(z_arr, requires_grad=True, dtype=np.float64)
            img = render_features(params, cfg, body, None, None, z,
                                  geom=geom, alpha=0.1)
            loss = loss_pixel(style_mix(params, img.feature), target)
            if want_grad:
                return float(loss.data), grad(loss, [z])[0]
            return float(loss.data)

        _, g = loss_of(z0, want_grad=True)
        flat_idx = rng.choice(z0.size, size=texels, replace=False)
        worst = 0.0
        for fi in flat_idx:
            zp = z0.copy().reshape(-1)
            zp[fi] += h
            fp = loss_of(zp.reshape(z0.shape))
            zp[fi] -= 2 * h
            fm = loss_of(zp.reshape(z0.shape))
            fd = (fp - fm) / (2 * h)
            ad = g.reshape(-1)[fi]
            worst = max(worst, abs(ad - fd) / max(abs(fd), 1e-8))
    return worst


# ---------------------------------------------------------------- commands

@_command("gen-data", {
    "ids": (int, 2), "views": (int, 8), "poses": (int, 1),
    "resolution": (int, 64), "supersample": (int, 2), "workers": (int, 1),
})
def cmd_gen_data(cfg):
    root = os.path.join(cfg["out"], "data")
    manifest = generate_dataset(root, cfg["ids"], cfg["views"], cfg["poses"],
                                resolution=cfg["resolution"], seed=cfg["seed"],
                                workers=cfg["workers"],
                                supersample=cfg["supersample"])
    print(f"gen-data: {len(manifest.frames)} frames "
          f"({cfg['ids']} ids x {cfg['views']} views x {cfg['poses']} poses) "
          f"at {cfg['resolution']}x{cfg['resolution']} -> {root}")


@_command("train-ad", {
    "data": (str, ""), "steps": (int, 2000), "feature_res": (int, 16),
    "n_samples": (int, 24), "latent": (_shape3, [16, 16, 8]),
    "lr_net": (float, 1e-3), "lr_latent": (float, 1e-2), "batch": (int, 1),
    "eik_points": (int, 16), "log_every": (int, 50),
    "checkpoint_every": (int, 0), "latent_mode": (str, "2d"),
    "workers": (int, 1), "eval_final": (_bool, True), **_WEIGHT_KEYS,
}, inputs=("data",))
def cmd_train_ad(cfg):
    manifest = DatasetManifest.load(cfg["data"])
    tc = TrainConfig(steps=cfg["steps"], feature_res=cfg["feature_res"],
                     n_samples=cfg["n_samples"], latent_shape=cfg["latent"],
                     lr_net=cfg["lr_net"], lr_latent=cfg["lr_latent"],
                     seed=cfg["seed"], workers=cfg["workers"],
                     batch=cfg["batch"], eik_points=cfg["eik_points"],
                     log_every=cfg["log_every"],
                     checkpoint_every=cfg["checkpoint_every"])
    params, bank, history = train_autodecoder(
        manifest, cfg["out"], tc, _weights(cfg),
        latent_mode=cfg["latent_mode"], quiet=False)
    line = f"train-ad: {cfg['steps']} steps, final loss {history[-1]['total']:.4f}"
    if cfg["eval_final"]:
        fcfg = FieldConfig(z_channels=cfg["latent"][2])
        l1, db = evaluate_recon(params, fcfg, manifest, bank, tc)
        line += f", recon L1 {l1:.4f}, PSNR {db:.2f} dB"
        with open(os.path.join(cfg["out"], "recon.json"), "w") as fh:
            json.dump({"l1": l1, "psnr_db": db}, fh, indent=1)
    print(line + f" -> {cfg['out']}")


@_command("train-diff", {
    "bank": (str, ""), "steps": (int, 2000), "lr": (float, 2e-3),
    "batch": (int, 8), "timesteps": (int, 1000), "beta_start": (float, 1e-4),
    "beta_end": (float, 2e-2), "mode": (str, "texel"), "blocks": (int, 2),
    "base": (int, 32), "emb_dim": (int, 32), "log_every": (int, 100),
}, inputs=("bank",))
def cmd_train_diff(cfg):
    if cfg["mode"] not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got '{cfg['mode']}'")
    bank = LatentBank.load(cfg["bank"])
    schedule = NoiseSchedule(cfg["timesteps"], cfg["beta_start"], cfg["beta_end"])
    dcfg = DenoiserConfig(blocks=cfg["blocks"], base=cfg["base"],
                          emb_dim=cfg["emb_dim"])
    params, stats, schedule, history = train_diffusion(
        bank.stack(), schedule, dcfg, mode=cfg["mode"], steps=cfg["steps"],
        lr=cfg["lr"], batch=cfg["batch"], seed=cfg["seed"],
        log_every=cfg["log_every"], quiet=False)
    model = os.path.join(cfg["out"], "diffusion.sldm")
    save_diffusion(model, params, stats, schedule, dcfg)
    with open(os.path.join(cfg["out"], "loss_log.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss"])
        for row in history:
            w.writerow([row["step"], f"{row['loss']:.6g}"])
    print(f"train-diff: {cfg['steps']} steps on {len(bank)} latents "
          f"(mode={cfg['mode']}), final loss {history[-1]['loss']:.2f} -> {model}")


@_command("sample", {
    "model": (str, ""), "n": (int, 4), "steps": (int, 100), "eta": (float, 0.0),
}, inputs=("model",))
def cmd_sample(cfg):
    fn, stats, schedule, _ = _diffusion_fn(cfg["model"])
    shape = stats.mean.shape
    z = ddim_sample(fn, schedule, cfg["n"], shape, steps=cfg["steps"],
                    eta=cfg["eta"], seed=cfg["seed"], stats=stats)
    bank = LatentBank(shape)
    for i in range(cfg["n"]):
        bank.add(f"sample_{i:04d}", z[i])
    path = os.path.join(cfg["out"], "samples.sldm")
    bank.save(path)
    print(f"sample: {cfg['n']} latents {shape} in {cfg['steps']} steps "
          f"(eta={cfg['eta']}), mean {z.mean():.4f}, std {z.std():.4f} -> {path}")


@_command("render", {
    "decoder": (str, ""), "bank": (str, ""), "ident": (str, ""),
    "data": (str, ""), "views": (int, 4), "resolution": (int, 64),
    "n_samples": (int, 24), "pose_seed": (int, -1), "normals": (_bool, False),
}, inputs=("decoder", "bank"))
def cmd_render(cfg):
    if not cfg["ident"]:
        raise UsageError("'render' needs --ident (a bank latent id)")
    params, fcfg, bank, alpha = _decoder_setup(cfg["decoder"], cfg["bank"])
    z = bank.get(cfg["ident"])
    body = build_body(ShapeParams())
    if cfg["data"]:
        manifest = DatasetManifest.load(cfg["data"])
        try:
            sid = manifest.identity(int(cfg["ident"]))
            body = build_body(sid.beta)
        except (ValueError, KeyError):
            pass  # not a dataset identity: keep the neutral body
    if cfg["pose_seed"] >= 0:
        pose = sample_pose(np.random.default_rng(cfg["pose_seed"]))
    else:
        pose = SkeletonPose.identity()
    fres = cfg["resolution"] // 4
    if fres < 2:
        raise UsageError(f"resolution {cfg['resolution']} too small (mixer "
                         "upsamples 4x; need >= 8)")
    for v in range(cfg["views"]):
        cam = ring_camera(v, cfg["views"], width=fres, img_height=fres)
        rgb = _render_latent(params, fcfg, body, pose, cam, z,
                             cfg["n_samples"], alpha, seed=cfg["seed"] + v)
        stem = os.path.join(cfg["out"], f"{cfg['ident']}_v{v:02d}")
        save_png(stem + ".png", rgb)
        if cfg["normals"]:
            normal, depth = render_normal_depth(
                params, fcfg, body, pose, cam, Tensor(np.asarray(z)),
                n_samples=cfg["n_samples"], alpha=alpha, seed=cfg["seed"] + v)
            save_png(stem + "_normal.png", 0.5 * (normal + 1.0))
            write_pfm(stem + "_depth.pfm", depth.astype(np.float32))
    print(f"render: {cfg['views']} views of '{cfg['ident']}' at "
          f"{4 * fres}x{4 * fres} -> {cfg['out']}")


@_command("edit", {
    "spec": (str, ""), "bank": (str, ""), "decoder": (str, ""),
    "model": (str, ""), "views": (int, 1), "resolution": (int, 64),
    "n_samples": (int, 24), "lam": (float, 0.5),
}, inputs=("spec", "bank"))
def cmd_edit(cfg):
    spec = EditSpec.from_file(cfg["spec"])
    for op in spec.ops:
        op.setdefault("lam", cfg["lam"])
    bank = LatentBank.load(cfg["bank"])
    fn = stats = schedule = None
    if cfg["model"]:
        if not os.path.exists(cfg["model"]):
            raise UsageError(f"--model: no such path: {cfg['model']}")
        fn, stats, schedule, _ = _diffusion_fn(cfg["model"])
    elif any(op.get("steps", 0) > 0 for op in spec.ops):
        raise UsageError("spec uses refinement steps > 0; pass --model")
    results = run_edits(spec, bank, denoise_fn=fn, schedule=schedule,
                        stats=stats, seed=cfg["seed"])
    out_bank = LatentBank(bank.shape)
    for name, z in results.items():
        out_bank.add(name, z)
    path = os.path.join(cfg["out"], "edits.sldm")
    out_bank.save(path)
    rendered = ""
    if cfg["decoder"]:
        if not os.path.exists(cfg["decoder"]):
            raise UsageError(f"--decoder: no such path: {cfg['decoder']}")
        params, _ = load_decoder(cfg["decoder"])
        fcfg = FieldConfig(z_channels=bank.shape[2])
        alpha = float(DensityParams.raw_to_alpha(params["density/raw"]).data) \
            if "density/raw" in params else 0.1
        body = build_body(ShapeParams())
        fres = cfg["resolution"] // 4
        for name, z in results.items():
            for v in range(cfg["views"]):
                cam = ring_camera(v, max(cfg["views"], 1),
                                  width=fres, img_height=fres)
                rgb = _render_latent(params, fcfg, body,
                                     SkeletonPose.identity(), cam, z,
                                     cfg["n_samples"], alpha,
                                     seed=cfg["seed"] + v)
                save_png(os.path.join(cfg["out"], f"{name}_v{v:02d}.png"), rgb)
        rendered = f", rendered {cfg['views']} view(s) each"
    print(f"edit: {len(spec.ops)} ops -> {sorted(results)}{rendered} -> {path}")


@_command("invert", {
    "decoder": (str, ""), "bank": (str, ""), "data": (str, ""),
    "ident": (int, 0), "frames": (_ints, []), "steps": (int, 300),
    "lr": (float, 1e-2), "n_samples": (int, 24), **_WEIGHT_KEYS,
}, inputs=("decoder", "bank", "data"))
def cmd_invert(cfg):
    manifest = DatasetManifest.load(cfg["data"])
    sid = manifest.identity(cfg["ident"])
    records = manifest.frames_of(cfg["ident"])
    if cfg["frames"]:
        records = [records[i] for i in cfg["frames"]]
    if not records:
        raise UsageError(f"identity {cfg['ident']} has no frames in {cfg['data']}")
    images = [manifest.load_image(r) for r in records]
    poses = [r.pose for r in records]
    cams = [r.camera for r in records]
    params, fcfg, bank, _ = _decoder_setup(cfg["decoder"], cfg["bank"])
    weights = _weights(cfg)
    icfg = InversionConfig(steps=cfg["steps"], lr=cfg["lr"], weights=weights,
                           n_samples=cfg["n_samples"], seed=cfg["seed"])
    body = build_body(sid.beta)
    z, history = invert(images, poses, cams, params, fcfg, bank, cfg=icfg,
                        body=body, quiet=False)
    out_bank = LatentBank(bank.shape)
    out_bank.add(f"inverted_{cfg['ident']}", z)
    path = os.path.join(cfg["out"], "inverted.sldm")
    out_bank.save(path)
    with open(os.path.join(cfg["out"], "loss_log.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        names = sorted({k for row in history for k in row})
        w.writerow(names)
        for row in history:
            w.writerow([f"{row.get(k, ''):.6g}" if isinstance(row.get(k), float)
                        else row.get(k, "") for k in names])
    # held-in check: render the recovered latent under the target views
    alpha = float(DensityParams.raw_to_alpha(params["density/raw"]).data) \
        if "density/raw" in params else 0.1
    res = images[0].shape[0] // 4
    vals = []
    for i, (im, pose, cam) in enumerate(zip(images, poses, cams)):
        geom = frame_geometry(body, pose, cam.resize(res, res),
                              cfg["n_samples"], seed=icfg.seed * 100003 + i)
        img = render_features(params, fcfg, body, None, None, Tensor(z),
                              geom=geom, alpha=alpha)
        vals.append(psnr(style_mix(params, img.feature).data, im))
    print(f"invert: identity {cfg['ident']}, {len(records)} views, "
          f"{cfg['steps']} steps, final loss {history[-1]['total']:.4f}, "
          f"PSNR {np.mean(vals):.2f} dB -> {path}")


@_command("eval-stats", {
    "bank": (str, ""), "samples": (str, ""), "model": (str, ""), "n": (int, 64),
    "steps": (int, 50), "eta": (float, 0.0), "decoder": (str, ""),
    "render_n": (int, 4), "resolution": (int, 64), "n_samples": (int, 24),
}, inputs=("bank",))
def cmd_eval_stats(cfg):
    ref = LatentBank.load(cfg["bank"]).stack().astype(np.float64)
    if cfg["samples"]:
        if not os.path.exists(cfg["samples"]):
            raise UsageError(f"--samples: no such path: {cfg['samples']}")
        gen = LatentBank.load(cfg["samples"]).stack().astype(np.float64)
    elif cfg["model"]:
        if not os.path.exists(cfg["model"]):
            raise UsageError(f"--model: no such path: {cfg['model']}")
        fn, stats, schedule, _ = _diffusion_fn(cfg["model"])
        gen = ddim_sample(fn, schedule, cfg["n"], ref.shape[1:],
                          steps=cfg["steps"], eta=cfg["eta"],
                          seed=cfg["seed"], stats=stats).astype(np.float64)
    else:
        raise UsageError("'eval-stats' needs --samples or --model")

    mu_r, sd_r = ref.mean(axis=0), ref.std(axis=0, ddof=0)
    mu_g, sd_g = gen.mean(axis=0), gen.std(axis=0, ddof=0)
    scale = max(float(sd_r.mean()), 1e-8)
    report = {
        "latent": {
            "mean_gap": float(np.mean(np.abs(mu_g - mu_r))),
            "std_gap": float(np.mean(np.abs(sd_g - sd_r))),
            "mean_gap_rel": float(np.mean(np.abs(mu_g - mu_r))) / scale,
            "std_gap_rel": float(np.mean(np.abs(sd_g - sd_r))) / scale,
            "n_ref": int(ref.shape[0]), "n_gen": int(gen.shape[0]),
        }
    }
    if cfg["decoder"]:
        if not os.path.exists(cfg["decoder"]):
            raise UsageError(f"--decoder: no such path: {cfg['decoder']}")
        params, _ = load_decoder(cfg["decoder"])
        fcfg = FieldConfig(z_channels=ref.shape[3])
        alpha = float(DensityParams.raw_to_alpha(params["density/raw"]).data) \
            if "density/raw" in params else 0.1
        body = build_body(ShapeParams())
        fres = cfg["resolution"] // 4
        cam = ring_camera(0, 4, width=fres, img_height=fres)

        def image_moments(latents):
            px = []
            for i, z in enumerate(latents[: cfg["render_n"]]):
                rgb = _render_latent(params, fcfg, body, SkeletonPose.identity(),
                                     cam, z, cfg["n_samples"], alpha,
                                     seed=cfg["seed"])
                px.append(rgb.reshape(-1, 3))
            px = np.concatenate(px, axis=0)
            return px.mean(axis=0), np.cov(px, rowvar=False)

        m_r, c_r = image_moments(ref)
        m_g, c_g = image_moments(gen)
        report["image"] = {
            "mean_dist": float(np.linalg.norm(m_g - m_r)),
            "cov_dist": float(np.linalg.norm(c_g - c_r)),
            "rendered_per_set": int(min(cfg["render_n"], len(ref), len(gen))),
        }
    path = os.path.join(cfg["out"], "eval_stats.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1)
    lat = report["latent"]
    line = (f"eval-stats: latent mean gap {lat['mean_gap']:.4f} "
            f"({100 * lat['mean_gap_rel']:.1f}% of ref std), "
            f"std gap {lat['std_gap']:.4f}")
    if "image" in report:
        line += (f"; image mean dist {report['image']['mean_dist']:.4f}, "
                 f"cov dist {report['image']['cov_dist']:.5f}")
    print(line + f" -> {path}")


@_command("grad-check", {"texels": (int, 6)})
def cmd_grad_check(cfg):
    results = check_all_ops(seed=cfg["seed"])
    results["render_loss"] = render_gradcheck(seed=cfg["seed"],
                                              texels=cfg["texels"])
    width = max(len(k) for k in results)
    print(f"{'op':<{width}}  max_rel_err")
    for name in sorted(results):
        print(f"{name:<{width}}  {results[name]:.3e}")
    worst = max(results.values())
    path = os.path.join(cfg["out"], "grad_check.json")
    with open(path, "w") as fh:
        json.dump({k: float(v) for k, v in results.items()}, fh, indent=1)
    if worst >= GRAD_TOL:
        bad = {k: v for k, v in results.items() if v >= GRAD_TOL}
        raise RuntimeError(f"gradient check failed (tol {GRAD_TOL:g}): {bad}")
    print(f"grad-check: {len(results)} checks, worst {worst:.3e} < {GRAD_TOL:g}")


@_command("ablate-norm", {
    "bank": (str, ""), "steps": (int, 400), "lr": (float, 2e-3),
    "batch": (int, 8), "n": (int, 64), "sample_steps": (int, 50),
    "blocks": (int, 1), "base": (int, 16), "emb_dim": (int, 16),
}, inputs=("bank",))
def cmd_ablate_norm(cfg):
    stack = LatentBank.load(cfg["bank"]).stack().astype(np.float64)
    mu_r, sd_r = stack.mean(axis=0), stack.std(axis=0, ddof=0)
    dcfg = DenoiserConfig(blocks=cfg["blocks"], base=cfg["base"],
                          emb_dim=cfg["emb_dim"])
    rows = []
    for mode in MODES:
        params, stats, schedule, _ = train_diffusion(
            stack, None, dcfg, mode=mode, steps=cfg["steps"], lr=cfg["lr"],
            batch=cfg["batch"], seed=cfg["seed"])
        z = ddim_sample(lambda z_t, t: denoise(params, z_t, t, dcfg),
                        schedule, cfg["n"], stack.shape[1:],
                        steps=cfg["sample_steps"], seed=cfg["seed"],
                        stats=stats).astype(np.float64)
        mean_gap = float(np.mean(np.abs(z.mean(axis=0) - mu_r)))
        std_gap = float(np.mean(np.abs(z.std(axis=0, ddof=0) - sd_r)))
        rows.append((mode, mean_gap, std_gap, mean_gap + std_gap))
        print(f"ablate-norm [{mode:>8}]: mean gap {mean_gap:.4f}, "
              f"std gap {std_gap:.4f}, score {mean_gap + std_gap:.4f}")
    path = os.path.join(cfg["out"], "ablate_norm.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "mean_gap", "std_gap", "score"])
        for row in rows:
            w.writerow([row[0]] + [f"{x:.6g}" for x in row[1:]])
    print(f"ablate-norm: 4 modes, {cfg['steps']} steps each -> {path}")


@_command("ablate-latent", {
    "data": (str, ""), "steps": (int, 600), "feature_res": (int, 16),
    "n_samples": (int, 24), "latent": (_shape3, [16, 16, 8]),
    "lr_net": (float, 1e-3), "lr_latent": (float, 1e-2), "batch": (int, 1),
    "eik_points": (int, 16), "workers": (int, 1), **_WEIGHT_KEYS,
}, inputs=("data",))
def cmd_ablate_latent(cfg):
    manifest = DatasetManifest.load(cfg["data"])
    weights = _weights(cfg)
    rows = []
    for mode in ("2d", "1d"):
        tc = TrainConfig(steps=cfg["steps"], feature_res=cfg["feature_res"],
                         n_samples=cfg["n_samples"], latent_shape=cfg["latent"],
                         lr_net=cfg["lr_net"], lr_latent=cfg["lr_latent"],
                         seed=cfg["seed"], workers=cfg["workers"],
                         batch=cfg["batch"], eik_points=cfg["eik_points"],
                         log_every=max(cfg["steps"] // 10, 1))
        out = os.path.join(cfg["out"], mode)
        params, bank, _ = train_autodecoder(manifest, out, tc, weights,
                                            latent_mode=mode)
        fcfg = FieldConfig(z_channels=cfg["latent"][2])
        l1, db = evaluate_recon(params, fcfg, manifest, bank, tc)
        rows.append((mode, l1, db))
        print(f"ablate-latent [{mode}]: recon L1 {l1:.4f}, PSNR {db:.2f} dB")
    path = os.path.join(cfg["out"], "ablate_latent.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["latent_mode", "recon_l1", "psnr_db"])
        for mode, l1, db in rows:
            w.writerow([mode, f"{l1:.6g}", f"{db:.4f}"])
    l1_2d, l1_1d = rows[0][1], rows[1][1]
    margin = (l1_1d - l1_2d) / max(l1_2d, 1e-12)
    print(f"ablate-latent: 1D error is {100 * margin:+.1f}% vs 2D -> {path}")


# -------------------------------------------------------------------- main

_USAGE = """usage: uvhuman <command> [--config FILE] [--key value ...]

commands:
  gen-data       render a synthetic multi-view dataset
  train-ad       fit the auto-decoder (fields, mixer, latents) to a dataset
  train-diff     fit the latent diffusion model to a trained bank
  sample         draw latents from a trained diffusion model
  render         render a bank latent from ring cameras
  edit           execute a JSON edit script (compose/swap/transfer/refine)
  invert         recover a latent for a dataset identity (frozen decoder)
  eval-stats     latent/image moment distances between two latent sets
  grad-check     finite-difference audit of every op + the render loss
  ablate-norm    normalization-mode comparison on one bank
  ablate-latent  structured 2D latent vs flat 1D baseline

Keys may come from --config (key=value lines) or flags; flags win. Every run
writes <out>/resolved.cfg, which can be replayed with --config."""


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help", "help"):
        print(_USAGE)
        return 0
    name = argv[0]
    if name not in COMMANDS:
        print(f"unknown command '{name}'\n\n{_USAGE}", file=sys.stderr)
        return 1
    try:
        cfg = _resolve(name, argv[1:])
        _check_inputs(name, cfg)
        _snapshot(name, cfg)
    except UsageError as e:
        print(f"uvhuman {name}: {e}", file=sys.stderr)
        return 1
    try:
        COMMANDS[name]["run"](cfg)
    except UsageError as e:
        print(f"uvhuman {name}: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - runtime failures exit 2
        print(f"uvhuman {name}: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
