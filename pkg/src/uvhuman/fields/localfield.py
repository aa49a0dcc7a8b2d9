"""Per-part local neural fields.

Each part owns a small sinusoidal MLP whose hidden layers are modulated by
the latent sampled at the query's UV location: sin(gamma * (W h + b) + phi)
with (gamma - 1, phi) an affine function of the conditioning vector. The
trunk and the feature head are conditioned on the first half of the latent
channels ("appearance"), the delta-SDF head on the second half
("geometry"), which is what makes channel-wise style transfer meaningful.

The feature head also sees the view direction; the delta-SDF head does not,
so geometry is view-independent by construction. The delta-SDF output layer
starts at zero: an untrained body is exactly the template.
"""

from __future__ import annotations

import numpy as np

from ..body.humanoid import N_PARTS
from ..numerics.tensor import Tensor, concat, sin

FIRST_FREQ = 30.0

# trunk layer count per part: deepest for the head, shallower down the spine,
# shallowest for limbs
TRUNK_LAYERS = [4, 3, 3, 3] + [2] * 12


class FieldConfig:
    def __init__(self, z_channels=8, feat_channels=16, width=32):
        self.z_channels = int(z_channels)
        self.feat_channels = int(feat_channels)
        self.width = int(width)
        if self.z_channels < 2 or self.z_channels % 2:
            raise ValueError(f"z_channels must be even and >= 2, got {z_channels}")

    @property
    def app_channels(self):
        return self.z_channels // 2

    @property
    def geo_channels(self):
        return self.z_channels - self.z_channels // 2


def _uniform(rng, shape, bound):
    return rng.uniform(-bound, bound, shape)


def init_field_params(cfg, seed=0):
    """Parameter dict for all 16 part fields, keys "field/<k>/...".

    Sinusoidal layers follow the usual frequency-aware uniform init; the
    modulation maps are randomly initialized (small) so conditioning is live
    from step zero; only the delta-SDF output layer starts at zero.
    """
    rng = np.random.default_rng(seed)
    w, ca, cg = cfg.width, cfg.app_channels, cfg.geo_channels
    params = {}
    for k in range(N_PARTS):
        pre = f"field/{k}"
        params[f"{pre}/l0/w"] = _uniform(rng, (3, w), 1.0 / 3.0)
        params[f"{pre}/l0/b"] = _uniform(rng, (w,), 1.0 / 3.0)
        for l in range(1, TRUNK_LAYERS[k]):
            params[f"{pre}/l{l}/w"] = _uniform(rng, (w, w), np.sqrt(6.0 / w))
            params[f"{pre}/l{l}/b"] = np.zeros(w)
            params[f"{pre}/l{l}/fw"] = _uniform(rng, (ca, 2 * w), 0.5 / np.sqrt(ca))
            params[f"{pre}/l{l}/fb"] = np.zeros(2 * w)
        # feature head: one modulated sine layer over (trunk, view dir)
        params[f"{pre}/fh/w"] = _uniform(rng, (w + 3, w), np.sqrt(6.0 / (w + 3)))
        params[f"{pre}/fh/b"] = np.zeros(w)
        params[f"{pre}/fh/fw"] = _uniform(rng, (ca, 2 * w), 0.5 / np.sqrt(ca))
        params[f"{pre}/fh/fb"] = np.zeros(2 * w)
        params[f"{pre}/fo/w"] = _uniform(rng, (w, cfg.feat_channels), np.sqrt(6.0 / w))
        params[f"{pre}/fo/b"] = np.zeros(cfg.feat_channels)
        # geometry head: one modulated sine layer, zero-initialized output
        params[f"{pre}/gh/w"] = _uniform(rng, (w, w), np.sqrt(6.0 / w))
        params[f"{pre}/gh/b"] = np.zeros(w)
        params[f"{pre}/gh/fw"] = _uniform(rng, (cg, 2 * w), 0.5 / np.sqrt(cg))
        params[f"{pre}/gh/fb"] = np.zeros(2 * w)
        params[f"{pre}/go/w"] = np.zeros((w, 1))
        params[f"{pre}/go/b"] = np.zeros(1)
    return {k: Tensor(v, requires_grad=True) for k, v in params.items()}


def _film_sin(h, w, b, fw, fb, cond):
    mod = cond @ fw + fb                      # (P, 2W)
    width = w.shape[1]
    gamma = 1.0 + mod[:, :width]
    phi = mod[:, width:]
    return sin(gamma * (h @ w + b) + phi)


def query_local(params, part, x_local, view_d, z, cfg):
    """One part's field at box-local coords.

    x_local (P, 3) and view_d (P, 3) are plain arrays (|view_d| = 1);
    z (P, C) is the sampled latent, Tensor or array. Returns
    (features (P, C_feat), delta_d (P, 1)) as Tensors.
    """
    view_d = np.asarray(view_d, dtype=np.float64)
    norms = np.linalg.norm(view_d, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValueError("view directions must be unit length within 1e-6")
    if not isinstance(z, Tensor):
        z = Tensor(z)
    ca = cfg.app_channels
    z_app = z[:, :ca]
    z_geo = z[:, ca:]
    pre = f"field/{part}"
    p = params

    h = sin(FIRST_FREQ * (Tensor(np.asarray(x_local)) @ p[f"{pre}/l0/w"] + p[f"{pre}/l0/b"]))
    for l in range(1, TRUNK_LAYERS[part]):
        h = _film_sin(h, p[f"{pre}/l{l}/w"], p[f"{pre}/l{l}/b"],
                      p[f"{pre}/l{l}/fw"], p[f"{pre}/l{l}/fb"], z_app)

    hf = concat([h, Tensor(view_d)], axis=1)
    hf = _film_sin(hf, p[f"{pre}/fh/w"], p[f"{pre}/fh/b"],
                   p[f"{pre}/fh/fw"], p[f"{pre}/fh/fb"], z_app)
    feat = hf @ p[f"{pre}/fo/w"] + p[f"{pre}/fo/b"]

    hg = _film_sin(h, p[f"{pre}/gh/w"], p[f"{pre}/gh/b"],
                   p[f"{pre}/gh/fw"], p[f"{pre}/gh/fb"], z_geo)
    dd = hg @ p[f"{pre}/go/w"] + p[f"{pre}/go/b"]
    return feat, dd
