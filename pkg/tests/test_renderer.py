"""Ray generation, volume quadrature, frame rendering, style mixer."""

import numpy as np
import pytest

from uvhuman.body import SkeletonPose, build_body, ring_camera
from uvhuman.fields import FieldConfig, init_field_params
from uvhuman.numerics.tensor import Tensor, grad, precision, sum_ as t_sum
from uvhuman.renderer import (
    FEATURE_CHANNELS,
    N_SAMPLES,
    background_feature,
    box_ray_range,
    composite_ray,
    frame_geometry,
    init_mixer_params,
    make_rays,
    render_features,
    render_normal_depth,
    stratified_samples,
    style_mix,
)


@pytest.fixture(scope="module")
def body():
    return build_body()


@pytest.fixture(scope="module")
def scene(body):
    cfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
    params = init_field_params(cfg, seed=0)
    rng = np.random.default_rng(0)
    z = rng.standard_normal((8, 8, cfg.z_channels)).astype(np.float32)
    cam = ring_camera(0, 8, width=12)
    return cfg, params, z, cam


# ------------------------------------------------------------- quadrature

def test_stratified_samples_one_per_bin():
    rng = np.random.default_rng(0)
    t = stratified_samples(np.array([1.0, 2.0]), np.array([3.0, 6.0]), 16, rng)
    assert t.shape == (2, 16)
    assert np.all(np.diff(t, axis=1) > 0)  # sorted because bins are disjoint
    for r, (lo, hi) in enumerate([(1.0, 3.0), (2.0, 6.0)]):
        edges = np.linspace(lo, hi, 17)
        assert np.all(t[r] >= edges[:-1]) and np.all(t[r] <= edges[1:])


def test_composite_constant_density_matches_analytic():
    """Uniform sigma over [near, far]: the quadrature is exact (N=64)."""
    sigma_val, near, far = 3.0, 0.5, 2.0
    rng = np.random.default_rng(1)
    with precision("float64"):
        t = stratified_samples(np.array([near]), np.array([far]), 64, rng)
        sigma = np.full((1, 64), sigma_val)
        feats = np.ones((1, 64, 2))
        feat, depth, opac, bg_w = composite_ray(Tensor(sigma), Tensor(feats),
                                                t, np.array([far]))
    length = far - t[0, 0]  # quadrature covers first sample -> far plane
    want_op = 1.0 - np.exp(-sigma_val * length)
    assert float(opac.data[0]) == pytest.approx(want_op, rel=1e-12)
    assert float(bg_w.data[0]) == pytest.approx(np.exp(-sigma_val * length), rel=1e-12)
    np.testing.assert_allclose(feat.data[0], want_op, rtol=1e-12)
    assert near < float(depth.data[0]) < far


def test_composite_weights_partition_unity():
    """Sample weights plus leftover background weight sum to one exactly."""
    rng = np.random.default_rng(2)
    R, N = 50, 24
    near = rng.uniform(0.1, 1.0, R)
    far = near + rng.uniform(0.5, 3.0, R)
    t = stratified_samples(near, far, N, rng)
    sigma = rng.uniform(0.0, 20.0, (R, N))
    feats = np.ones((R, N, 1))
    with precision("float64"):
        feat, _, opac, bg_w = composite_ray(Tensor(sigma), Tensor(feats), t, far)
    np.testing.assert_allclose(opac.data + bg_w.data, 1.0, atol=1e-12)
    assert np.all(opac.data >= 0.0) and np.all(opac.data <= 1.0)
    # with constant unit features, the composited feature equals the opacity
    np.testing.assert_allclose(feat.data[:, 0], opac.data, atol=1e-12)
    # the default float32 path agrees to single precision
    feat32, _, opac32, bg32 = composite_ray(Tensor(sigma), Tensor(feats), t, far)
    np.testing.assert_allclose(opac32.data + bg32.data, 1.0, atol=1e-6)
    np.testing.assert_allclose(feat32.data[:, 0], feat.data[:, 0], atol=1e-5)


def test_composite_zero_density_is_transparent():
    t = np.linspace(0.5, 2.0, 8)[None, :]
    feat, _, opac, bg_w = composite_ray(Tensor(np.zeros((1, 8))),
                                        Tensor(np.ones((1, 8, 3))), t,
                                        np.array([2.0]))
    assert float(opac.data[0]) == 0.0
    assert float(bg_w.data[0]) == 1.0
    np.testing.assert_array_equal(feat.data, 0.0)


def test_composite_opaque_wall_hides_everything_behind():
    t = np.linspace(1.0, 2.0, 16)[None, :]
    sigma = np.zeros((1, 16))
    sigma[0, 3] = 1e4  # a practically opaque interval
    feats = np.zeros((1, 16, 1))
    feats[0, 3, 0] = 5.0   # the wall's own feature
    feats[0, 10, 0] = 99.0  # hidden behind it
    feat, depth, opac, bg_w = composite_ray(Tensor(sigma), Tensor(feats), t,
                                            np.array([2.0]))
    assert float(opac.data[0]) == pytest.approx(1.0, abs=1e-10)
    assert float(bg_w.data[0]) == pytest.approx(0.0, abs=1e-10)
    assert float(feat.data[0, 0]) == pytest.approx(5.0, rel=1e-8)
    assert float(depth.data[0]) == pytest.approx(t[0, 3], rel=1e-6)


def test_composite_gradient_flows():
    rng = np.random.default_rng(3)
    t = stratified_samples(np.array([0.5]), np.array([2.0]), 8, rng)
    sigma = Tensor(rng.uniform(0.5, 2.0, (1, 8)), requires_grad=True)
    feats = Tensor(rng.standard_normal((1, 8, 2)), requires_grad=True)
    feat, depth, opac, _ = composite_ray(sigma, feats, t, np.array([2.0]))
    gs, gf = grad(t_sum(feat) + t_sum(opac), [sigma, feats])
    assert np.abs(gs).sum() > 0 and np.abs(gf).sum() > 0


# ------------------------------------------------------------------ rays

def test_box_ray_range_axis_aligned_oracle():
    boxes = np.array([[[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]])
    o = np.array([[-5.0, 0.0, 0.0], [-5.0, 3.0, 0.0]])
    d = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    near, far, hit = box_ray_range(o, d, boxes)
    assert hit[0] and not hit[1]
    assert near[0] == pytest.approx(4.0, abs=1e-12)
    assert far[0] == pytest.approx(6.0, abs=1e-12)


def test_box_ray_range_origin_inside_box():
    boxes = np.array([[[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]])
    near, far, hit = box_ray_range(np.zeros((1, 3)), np.array([[0.0, 0.0, 1.0]]),
                                   boxes)
    assert hit[0]
    assert near[0] > 0.0  # clamped in front of the origin
    assert far[0] == pytest.approx(1.0, abs=1e-12)


def test_make_rays_frames_the_body(body, scene):
    _, _, _, cam = scene
    rays = make_rays(cam, body, SkeletonPose.identity())
    assert rays.count == cam.width * cam.height
    assert rays.hit.any() and not rays.hit.all()
    assert np.all(rays.far[rays.hit] > rays.near[rays.hit])
    assert np.all(rays.near[rays.hit] > 0)


# ----------------------------------------------------------------- frame

def test_background_feature_is_white_rgb():
    bg = background_feature(8)
    np.testing.assert_array_equal(bg[:3], 1.0)
    np.testing.assert_array_equal(bg[3:], 0.0)
    assert FEATURE_CHANNELS == 16 and N_SAMPLES == 24


def test_render_features_shapes_and_background(body, scene):
    cfg, params, z, cam = scene
    img = render_features(params, cfg, body, SkeletonPose.identity(), cam, z,
                          n_samples=6, seed=0)
    h, w = cam.height, cam.width
    assert img.feature.shape == (h, w, cfg.feat_channels)
    assert img.depth.shape == (h, w) and img.opacity.shape == (h, w)
    # a miss pixel carries the white background and zero opacity
    miss = ~img.hit.reshape(h, w)
    assert miss.any()
    np.testing.assert_array_equal(img.rgb.data[miss], 1.0)
    np.testing.assert_array_equal(img.opacity.data[miss], 0.0)
    np.testing.assert_allclose(img.depth.data[miss], img.max_far, atol=1e-12)
    # some body pixel is substantially opaque
    assert img.opacity.data.max() > 0.5


def test_render_features_same_seed_bitwise(body, scene):
    cfg, params, z, cam = scene
    pose = SkeletonPose.identity()
    a = render_features(params, cfg, body, pose, cam, z, n_samples=6, seed=3)
    b = render_features(params, cfg, body, pose, cam, z, n_samples=6, seed=3)
    c = render_features(params, cfg, body, pose, cam, z, n_samples=6, seed=4)
    np.testing.assert_array_equal(a.feature.data, b.feature.data)
    assert not np.array_equal(a.feature.data, c.feature.data)


def test_render_features_reuses_cached_geometry(body, scene):
    cfg, params, z, cam = scene
    pose = SkeletonPose.identity()
    geom = frame_geometry(body, pose, cam, n_samples=6, seed=5)
    a = render_features(params, cfg, body, pose, cam, z, geom=geom)
    b = render_features(params, cfg, body, pose, cam, z, n_samples=6, seed=5)
    np.testing.assert_array_equal(a.feature.data, b.feature.data)


def test_render_features_gradient_reaches_latent(body, scene):
    cfg, params, z, cam = scene
    zt = Tensor(z.astype(np.float64), requires_grad=True)
    img = render_features(params, cfg, body, SkeletonPose.identity(), cam, zt,
                          n_samples=6, seed=0)
    (gz,) = grad(t_sum(img.feature * img.feature), [zt])
    assert np.abs(gz).sum() > 0


# ------------------------------------------------------------- stylemix

def test_style_mix_upsamples_4x_into_unit_range(scene):
    cfg, _, _, _ = scene
    mixer = init_mixer_params(cfg, seed=0)
    rng = np.random.default_rng(0)
    feat = rng.standard_normal((6, 5, cfg.feat_channels))
    rgb = style_mix(mixer, Tensor(feat))
    assert rgb.shape == (24, 20, 3)
    assert rgb.data.min() >= 0.0 and rgb.data.max() <= 1.0


def test_style_mix_gradient_reaches_feature_and_weights(scene):
    cfg, _, _, _ = scene
    mixer = init_mixer_params(cfg, seed=1)
    feat = Tensor(np.random.default_rng(1).standard_normal((4, 4, cfg.feat_channels)),
                  requires_grad=True)
    rgb = style_mix(mixer, feat)
    leaves = [feat, mixer["mixer/b0c0/w"], mixer["mixer/b1c1/b"]]
    gs = grad(t_sum(rgb * rgb), leaves)
    for g in gs:
        assert np.abs(g).sum() > 0


# -------------------------------------------------------------- surface

def test_render_normal_depth_units_and_background(body, scene):
    cfg, params, z, cam = scene
    normals, depth = render_normal_depth(params, cfg, body,
                                         SkeletonPose.identity(), cam, z,
                                         n_samples=8, seed=0)
    assert normals.shape == (cam.height, cam.width, 3)
    assert depth.shape == (cam.height, cam.width)
    lens = np.linalg.norm(normals.reshape(-1, 3), axis=1)
    solid = lens > 0
    assert solid.any()
    np.testing.assert_allclose(lens[solid], 1.0, atol=1e-9)
    # background depth sits at the far plane, strictly behind every surface
    assert depth.max() == pytest.approx(depth[0, 0])  # corner pixel misses
    assert depth[solid.reshape(depth.shape)].min() < depth.max()
