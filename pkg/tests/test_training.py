"""Loss suite, discriminator, and the auto-decoder optimization loop."""

import csv
import os

import numpy as np
import pytest

from uvhuman.dataio import generate_dataset
from uvhuman.fields import FieldConfig
from uvhuman.numerics.tensor import Tensor, grad, sum_ as t_sum
from uvhuman.training import (
    LossWeights,
    PerceptualProxy,
    TrainConfig,
    adversarial_losses,
    discriminate,
    downsample_area,
    evaluate_recon,
    init_discriminator,
    load_decoder,
    loss_eikonal,
    loss_latent_tv,
    loss_perceptual,
    loss_pixel,
    psnr,
    train_autodecoder,
)


def test_loss_weights_defaults_round_trip():
    w = LossWeights(adv=0.0)
    d = w.to_dict()
    assert d["adv"] == 0.0 and d["pix"] > 0
    assert set(d) >= {"pix", "perc", "adv", "vol"}


def test_loss_pixel_oracle():
    a = np.zeros((4, 4, 3))
    b = np.full((4, 4, 3), 0.25)
    assert float(loss_pixel(Tensor(a), Tensor(b)).data) == pytest.approx(0.25)
    assert float(loss_pixel(Tensor(b), Tensor(b)).data) == 0.0


def test_downsample_area_oracle():
    img = np.arange(16, dtype=np.float64).reshape(4, 4, 1)
    out = downsample_area(img, 2, 2)
    want = np.array([[2.5, 4.5], [10.5, 12.5]])[:, :, None]
    np.testing.assert_allclose(out, want, atol=1e-12)
    with pytest.raises(ValueError):
        downsample_area(img, 3, 3)


def test_latent_tv_oracle():
    z = np.zeros((2, 2, 1))
    z[1, 0, 0] = 1.0  # one step along u, one along v from its neighbours
    val = float(loss_latent_tv(Tensor(z)).data)
    assert val == pytest.approx(2.0)
    assert float(loss_latent_tv(Tensor(np.ones((3, 3, 2)))).data) == 0.0


def test_perceptual_proxy_deterministic_and_zero_on_match():
    rng = np.random.default_rng(0)
    img = rng.random((16, 16, 3))
    pa, pb = PerceptualProxy(seed=4), PerceptualProxy(seed=4)
    fa = pa.features(Tensor(img))
    fb = pb.features(Tensor(img))
    for a, b in zip(fa, fb):
        np.testing.assert_array_equal(a.data, b.data)
    assert float(loss_perceptual(Tensor(img), Tensor(img), pa).data) == 0.0
    other = rng.random((16, 16, 3))
    assert float(loss_perceptual(Tensor(other), Tensor(img), pa).data) > 0.0


def test_eikonal_measures_gradient_norm():
    # a unit-slope plane has |grad d| = 1 everywhere -> loss 1
    plane = lambda p: Tensor(np.asarray(p)[:, 0])
    pts = np.random.default_rng(1).uniform(-1, 1, (20, 3))
    assert float(loss_eikonal(plane, pts).data) == pytest.approx(1.0, abs=1e-9)
    flat = lambda p: Tensor(np.zeros(len(p)))
    assert float(loss_eikonal(flat, pts).data) == 0.0
    steep = lambda p: Tensor(3.0 * np.asarray(p)[:, 1])
    assert float(loss_eikonal(steep, pts).data) == pytest.approx(9.0, rel=1e-9)


def test_discriminator_patch_logits():
    params = init_discriminator(seed=0)
    img = np.random.default_rng(2).random((16, 16, 3))
    logits = discriminate(params, img)
    assert logits.shape == (1, 1, 4, 4)
    assert np.all(np.isfinite(logits.data))


def test_adversarial_losses_zero_logit_baseline():
    zero_disc = lambda img: Tensor(np.zeros((1, 1, 2, 2)))
    g, d = adversarial_losses(zero_disc, Tensor(np.zeros((8, 8, 3))),
                              Tensor(np.ones((8, 8, 3))))
    assert float(g.data) == pytest.approx(np.log(2.0), rel=1e-6)
    assert float(d.data) == pytest.approx(np.log(2.0), rel=1e-6)


def test_adversarial_fake_detached_from_discriminator_term():
    """The discriminator objective must not backprop into the generator image."""
    params = init_discriminator(seed=1)
    fake = Tensor(np.random.default_rng(3).random((16, 16, 3)), requires_grad=True)
    real = Tensor(np.random.default_rng(4).random((16, 16, 3)))
    g_term, d_term = adversarial_losses(lambda im: discriminate(params, im),
                                        fake, real)
    (g_of_g,) = grad(g_term, [fake])
    (g_of_d,) = grad(d_term, [fake])
    assert np.abs(g_of_g).sum() > 0          # generator term reaches the image
    np.testing.assert_array_equal(g_of_d, 0.0)  # discriminator term does not


def test_psnr_oracle():
    img = np.full((4, 4, 3), 0.5)
    assert psnr(img, img) >= 120.0 - 1e-6
    noisy = img + 0.1
    assert psnr(noisy, img) == pytest.approx(20.0, rel=1e-6)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A 60-step training run on a 2-identity toy dataset."""
    root = str(tmp_path_factory.mktemp("trainds"))
    manifest = generate_dataset(root, n_ids=2, n_views=2, n_poses=1,
                                resolution=16, seed=0, supersample=1)
    out = str(tmp_path_factory.mktemp("trainout"))
    cfg = TrainConfig(steps=60, feature_res=4, n_samples=6,
                      latent_shape=(8, 8, 4), seed=0, log_every=10,
                      eik_points=4)
    fcfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
    weights = LossWeights(adv=0.0)
    params, bank, history = train_autodecoder(manifest, out, config=cfg,
                                              weights=weights, field_cfg=fcfg)
    return manifest, out, cfg, fcfg, params, bank, history


def test_training_reduces_loss(trained):
    *_, history = trained
    assert history[-1]["total"] < history[0]["total"]
    assert all(np.isfinite(h["total"]) for h in history)


def test_training_outputs_on_disk(trained):
    _, out, cfg, *_ = trained
    assert os.path.exists(os.path.join(out, "autodecoder.sldm"))
    assert os.path.exists(os.path.join(out, "bank.sldm"))
    with open(os.path.join(out, "loss_log.csv")) as f:
        rows = list(csv.reader(f))
    assert rows[0][0] == "step" and rows[0][-1] == "total"
    assert len(rows) >= 2
    steps = [int(r[0]) for r in rows[1:]]
    assert steps[0] == 0 and steps[-1] == cfg.steps - 1


def test_trained_bank_matches_manifest(trained):
    manifest, _, cfg, _, _, bank, _ = trained
    assert sorted(bank.ids()) == sorted(str(s.ident) for s in manifest.identities)
    assert bank.shape == cfg.latent_shape
    for i in bank.ids():
        z = bank.get(i)
        assert z.dtype == np.float32
        assert np.abs(z).max() > 0  # latents moved away from tiny init


def test_load_decoder_round_trip(trained):
    _, out, _, _, params, _, _ = trained
    back_params, back_latents = load_decoder(os.path.join(out, "autodecoder.sldm"))
    assert set(back_params) == set(params)
    for k in params:
        np.testing.assert_allclose(back_params[k].data,
                                   params[k].data.astype(np.float32), atol=1e-7)
    assert len(back_latents) == 2


def test_evaluate_recon_finite(trained):
    manifest, _, cfg, fcfg, params, bank, _ = trained
    l1, p = evaluate_recon(params, fcfg, manifest, bank, cfg)
    assert np.isfinite(l1) and np.isfinite(p)
    assert 0.0 < l1 < 1.0
    assert p > 5.0  # even a 60-step model beats random noise


def test_flat_vector_baseline_trains(tmp_path):
    root = str(tmp_path / "ds")
    manifest = generate_dataset(root, n_ids=1, n_views=2, n_poses=1,
                                resolution=16, seed=1, supersample=1)
    cfg = TrainConfig(steps=20, feature_res=4, n_samples=6,
                      latent_shape=(8, 8, 4), seed=0, log_every=5, eik_points=0)
    fcfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
    params, bank, history = train_autodecoder(
        manifest, str(tmp_path / "out"), config=cfg,
        weights=LossWeights(adv=0.0, eik=0.0), field_cfg=fcfg, latent_mode="1d")
    assert "flat/w" in params
    assert history[-1]["total"] < history[0]["total"]
    # the exported bank contains the *expanded* UV map, constant over texels
    z = bank.get(bank.ids()[0])
    assert z.shape == (8, 8, 4)
    np.testing.assert_allclose(z, z[0, 0][None, None, :], atol=1e-7)


def test_rejects_unknown_latent_mode(tmp_path):
    root = str(tmp_path / "ds")
    manifest = generate_dataset(root, 1, 1, 1, resolution=16, seed=2,
                                supersample=1)
    with pytest.raises(ValueError):
        train_autodecoder(manifest, str(tmp_path / "out"),
                          config=TrainConfig(steps=1), latent_mode="3d")
