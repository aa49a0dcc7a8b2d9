"""Reconstruction, regularization, and adversarial loss terms.

The perceptual term compares activations of a fixed random (never trained)
convolutional feature extractor rather than a pretrained network, so the
whole package stays free of external weights. There is deliberately no
face-identity term anywhere: LOSS_REGISTRY below is the complete list of
terms the trainer may combine.
"""

from __future__ import annotations

import numpy as np

from ..numerics import nn
from ..numerics.tensor import Tensor, abs_, leaky_relu, mean, softplus, sqrt, transpose

LOSS_REGISTRY = ("pixel", "perceptual", "adversarial", "volume",
                 "latent_l2", "latent_tv", "eikonal")


class LossWeights:
    """Nonnegative weights for each generator-side term."""

    def __init__(self, pix=1.0, perc=0.1, adv=0.0, vol=0.5,
                 reg_l2=1e-4, reg_tv=1e-4, eik=0.01):
        vals = dict(pix=pix, perc=perc, adv=adv, vol=vol,
                    reg_l2=reg_l2, reg_tv=reg_tv, eik=eik)
        for k, v in vals.items():
            v = float(v)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"loss weight {k} must be finite and >= 0, got {v}")
            setattr(self, k, v)

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("pix", "perc", "adv", "vol", "reg_l2", "reg_tv", "eik")}


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def loss_pixel(img, gt):
    """Mean absolute error between two (H, W, 3) images."""
    return mean(abs_(_as_tensor(img) - _as_tensor(gt)))


def _nchw(img):
    img = _as_tensor(img)
    h, w, c = img.shape
    return transpose(img, (2, 0, 1)).reshape(1, c, h, w)


class PerceptualProxy:
    """Three fixed random convolution layers; activations define the metric.

    Parameters are drawn once from the seed and are not trainable, so two
    proxies with the same seed are bit-identical.
    """

    def __init__(self, seed=0, channels=(8, 12, 16)):
        rng = np.random.default_rng(seed)
        self.layers = []
        c_in = 3
        for c_out in channels:
            fan = c_in * 9
            w = Tensor(rng.uniform(-np.sqrt(6.0 / fan), np.sqrt(6.0 / fan),
                                   size=(c_out, c_in, 3, 3)))
            self.layers.append(w)
            c_in = c_out

    def features(self, img):
        """Activations of each layer on an (H, W, 3) image."""
        x = _nchw(img)
        feats = []
        for w in self.layers:
            x = leaky_relu(nn.conv(x, w, stride=2, padding=1))
            feats.append(x)
        return feats


def loss_perceptual(img, gt, proxy):
    """Sum over proxy layers of (1/N_j) * l2-norm of the activation gap."""
    fa = proxy.features(img)
    fb = proxy.features(gt)
    total = None
    for a, b in zip(fa, fb):
        n = a.size
        term = sqrt(((a - b) ** 2).sum()) * (1.0 / n)
        total = term if total is None else total + term
    return total


def loss_vol(feat_img, gt_down):
    """l2 norm between the feature image's RGB channels and downsampled truth."""
    rgb = _as_tensor(feat_img)[:, :, :3]
    return sqrt(((rgb - _as_tensor(gt_down)) ** 2).sum())


def downsample_area(img, h, w):
    """Area-average an (H, W, C) array down to (h, w, C); exact integer factors."""
    img = np.asarray(img)
    H, W = img.shape[:2]
    if H % h or W % w:
        raise ValueError(f"downsample {H}x{W} -> {h}x{w} needs integer factors")
    return img.reshape(h, H // h, w, W // w, -1).mean(axis=(1, 3)).reshape(
        h, w, *img.shape[2:])


def loss_latent_l2(z):
    """Sum of squared latent entries."""
    return (_as_tensor(z) ** 2).sum()


def loss_latent_tv(z):
    """Anisotropic total variation over the two chart axes."""
    z = _as_tensor(z)
    du = abs_(z[1:, :, :] - z[:-1, :, :]).sum()
    dv = abs_(z[:, 1:, :] - z[:, :-1, :]).sum()
    return du + dv


def loss_latent_reg(z, lam_l2=1.0, lam_tv=1.0):
    """Weighted combination of the two latent regularizers."""
    return lam_l2 * loss_latent_l2(z) + lam_tv * loss_latent_tv(z)


def loss_eikonal(dd_fn, points, h=1e-3):
    """Mean squared gradient norm of a delta-SDF evaluator, by central FD.

    dd_fn maps (P, 3) points to a (P,) Tensor; the six axis probes reuse the
    same evaluator, so parameter gradients flow through all of them.
    """
    points = np.asarray(points, dtype=np.float64)
    total = None
    for ax in range(3):
        step = np.zeros(3)
        step[ax] = h
        g = (dd_fn(points + step) - dd_fn(points - step)) * (1.0 / (2.0 * h))
        sq = (g ** 2)
        total = sq if total is None else total + sq
    return total.mean()


def adversarial_losses(disc_fn, img_fake, img_real):
    """Non-saturating logistic GAN losses over patch logits.

    disc_fn maps an image to a logit map. Returns (generator term,
    discriminator term); the discriminator term averages its real and fake
    halves, so zero logits give ln 2 for both outputs. The fake image is
    detached on the discriminator side, so that term trains only the
    discriminator.
    """
    gen = mean(softplus(-disc_fn(img_fake)))
    fake = img_fake.detach() if isinstance(img_fake, Tensor) else img_fake
    disc = 0.5 * (mean(softplus(-disc_fn(img_real))) + mean(softplus(disc_fn(fake))))
    return gen, disc
