"""Windowed local fields: box windows, density mapping, conditioned queries."""

import numpy as np
import pytest

from uvhuman.body import N_PARTS, SkeletonPose, build_body
from uvhuman.fields import (
    DEFAULT_M,
    DEFAULT_N,
    DensityParams,
    FieldConfig,
    WindowParams,
    blend_eval,
    blended_query,
    box_coords,
    box_memberships,
    init_field_params,
    query_local,
    sdf_to_density,
    window_weight,
)
from uvhuman.numerics.tensor import Tensor, grad, sum_ as t_sum


@pytest.fixture(scope="module")
def body():
    return build_body()


@pytest.fixture(scope="module")
def field_setup():
    cfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
    params = init_field_params(cfg, seed=0)
    return cfg, params


# ---------------------------------------------------------------- window

def test_window_params_validated():
    WindowParams()  # defaults fine
    with pytest.raises(ValueError):
        WindowParams(m=-1.0)
    with pytest.raises(ValueError):
        WindowParams(n=7)  # odd
    with pytest.raises(ValueError):
        WindowParams(n=0)


def test_window_is_one_at_center():
    w = window_weight(np.zeros((1, 3)))
    np.testing.assert_allclose(w, 1.0, atol=1e-15)


def test_window_face_value_is_one_thousandth():
    """At a box face center (one coordinate at +-1), omega = exp(-m) = 1e-3."""
    face = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    w = window_weight(face)
    np.testing.assert_allclose(w, 1e-3, rtol=1e-12)
    assert DEFAULT_M == pytest.approx(np.log(1000.0))
    assert DEFAULT_N == 8


def test_window_monotone_decreasing_along_axis():
    x = np.zeros((50, 3))
    x[:, 0] = np.linspace(0.0, 1.0, 50)
    w = window_weight(x)
    assert np.all(np.diff(w) <= 0)
    assert np.all(w > 0)


def test_window_flat_core_and_symmetry():
    # n = 8 keeps the window almost exactly 1 deep inside the box
    core = window_weight(np.array([[0.3, 0.2, -0.25]]))
    assert core[0] > 0.999
    a = window_weight(np.array([[0.7, 0.1, -0.3]]))
    b = window_weight(np.array([[-0.7, -0.1, 0.3]]))
    np.testing.assert_allclose(a, b, rtol=1e-15)


def test_box_coords_normalizes_to_unit_cube():
    box = np.array([[-1.0, 0.0, 2.0], [3.0, 2.0, 4.0]])
    lo, hi = box[0], box[1]
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    pts = np.array([center, hi, lo, center + 0.5 * half])
    c = box_coords(pts, box)
    np.testing.assert_allclose(c[0], 0.0, atol=1e-12)
    np.testing.assert_allclose(c[1], 1.0, atol=1e-12)
    np.testing.assert_allclose(c[2], -1.0, atol=1e-12)
    np.testing.assert_allclose(c[3], 0.5, atol=1e-12)


def test_box_memberships_normalized(body):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.4, 0.4, (300, 3)) + np.array([0.0, 0.0, 0.9])
    coords, omega, norm = box_memberships(body, pts)
    assert coords.shape == (300, N_PARTS, 3)
    assert np.all(omega >= 0.0) and np.all(norm >= 0.0) and np.all(norm <= 1.0)
    hit = omega.sum(axis=1) > 0
    assert hit.any()
    np.testing.assert_allclose(norm[hit].sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(norm[~hit], 0.0)
    # omega vanishes outside the box: far point touches nothing
    _, om_far, _ = box_memberships(body, np.array([[5.0, 5.0, 5.0]]))
    np.testing.assert_array_equal(om_far, 0.0)


# ---------------------------------------------------------------- density

def test_density_params_softplus_round_trip():
    dp = DensityParams(alpha=0.1)
    assert float(DensityParams.raw_to_alpha(dp.raw)) == pytest.approx(0.1, rel=1e-9)
    assert float(DensityParams.raw_to_alpha(np.array(-5.0))) > 0  # stays positive


def test_sdf_to_density_oracle():
    # sigma(d) = sigmoid(-d / alpha) / alpha
    alpha = 0.25
    d = np.array([-1.0, 0.0, 1.0])
    sig = sdf_to_density(Tensor(d), alpha).data
    want = 1.0 / (1.0 + np.exp(d / alpha)) / alpha
    np.testing.assert_allclose(sig, want, rtol=1e-6)
    # surface value is exactly 1/(2 alpha); deep inside saturates at 1/alpha
    assert sig[1] == pytest.approx(0.5 / alpha, rel=1e-6)
    deep = sdf_to_density(Tensor(np.array([-10.0])), alpha).data[0]
    assert deep == pytest.approx(1.0 / alpha, rel=1e-4)


def test_sdf_to_density_monotone_decreasing():
    d = np.linspace(-0.5, 0.5, 101)
    sig = sdf_to_density(Tensor(d), 0.1).data
    assert np.all(np.diff(sig) < 0)


# ---------------------------------------------------------------- fields

def test_field_config_validates_channels():
    with pytest.raises(ValueError):
        FieldConfig(z_channels=3)
    with pytest.raises(ValueError):
        FieldConfig(z_channels=0)
    cfg = FieldConfig(z_channels=6)
    assert cfg.app_channels + cfg.geo_channels == 6


def test_init_field_params_deterministic_and_covers_parts(field_setup):
    cfg, params = field_setup
    again = init_field_params(cfg, seed=0)
    assert set(params) == set(again)
    for k, v in params.items():
        np.testing.assert_array_equal(v.data, again[k].data)
        assert v.requires_grad
    for part in range(N_PARTS):
        assert f"field/{part}/l0/w" in params


def test_query_local_shapes_and_zero_init_delta(field_setup):
    cfg, params = field_setup
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, (10, 3))
    v = rng.standard_normal((10, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    z = rng.standard_normal((10, cfg.z_channels)).astype(np.float32)
    feat, dd = query_local(params, 0, x, v, z, cfg)
    assert feat.shape == (10, cfg.feat_channels)
    assert dd.shape == (10, 1)
    # delta-SDF head starts at zero so geometry begins at the template
    np.testing.assert_array_equal(dd.data, 0.0)


def test_query_local_rejects_non_unit_views(field_setup):
    cfg, params = field_setup
    with pytest.raises(ValueError):
        query_local(params, 0, np.zeros((1, 3)), np.array([[1.0, 1.0, 0.0]]),
                    np.zeros((1, cfg.z_channels)), cfg)


def test_appearance_geometry_channel_split():
    """Features never see the geometry half of z; delta-SDF does.

    (The delta head shares the appearance-conditioned trunk, so it responds
    to both halves; the split is one-directional by design.)
    """
    cfg = FieldConfig(z_channels=4, feat_channels=8, width=16)
    params = init_field_params(cfg, seed=7)
    rng = np.random.default_rng(2)
    # push the delta output layer off its zero init so it is observable
    params["field/0/go/w"].data[:] = rng.standard_normal(
        params["field/0/go/w"].shape) * 0.1
    x = rng.uniform(-0.5, 0.5, (6, 3))
    v = np.tile(np.array([[0.0, 0.0, 1.0]]), (6, 1))
    z0 = rng.standard_normal((6, cfg.z_channels))
    z_app = z0.copy()
    z_app[:, :cfg.app_channels] += 1.0   # appearance half only
    z_geo = z0.copy()
    z_geo[:, cfg.app_channels:] += 1.0   # geometry half only

    f0, d0 = query_local(params, 0, x, v, z0, cfg)
    fa, _ = query_local(params, 0, x, v, z_app, cfg)
    fg, dg = query_local(params, 0, x, v, z_geo, cfg)
    assert not np.allclose(fa.data, f0.data)          # features see appearance
    np.testing.assert_array_equal(fg.data, f0.data)   # features blind to geometry
    assert not np.allclose(dg.data, d0.data)          # delta sees geometry


def test_blend_eval_gradient_reaches_latent_map(body, field_setup):
    cfg, params = field_setup
    rng = np.random.default_rng(3)
    pts = body.vertices[::50]
    from uvhuman.body import nearest_faces, template_distance
    hit = nearest_faces(body, pts)
    d_t = template_distance(body, pts, hit=hit)
    v = np.tile(np.array([[0.0, 0.0, 1.0]]), (len(pts), 1))
    z_map = Tensor(rng.standard_normal((8, 8, cfg.z_channels)), requires_grad=True)
    feat, d_total, inside = blend_eval(params, cfg, body, pts, hit.uv, d_t, v, z_map)
    assert inside.all()  # template surface points sit inside their part boxes
    (gz,) = grad(t_sum(feat * feat) + t_sum(d_total * d_total), [z_map])
    assert np.abs(gz).sum() > 0


def test_blended_query_zero_density_outside(body, field_setup):
    cfg, params = field_setup
    rng = np.random.default_rng(4)
    z_map = rng.standard_normal((8, 8, cfg.z_channels)).astype(np.float32)
    x = np.array([[4.0, 4.0, 4.0], [0.0, 0.0, 0.9]])
    v = np.tile(np.array([[0.0, 0.0, 1.0]]), (2, 1))
    feat, sigma = blended_query(params, cfg, body, SkeletonPose.identity(),
                                x, v, z_map, alpha=0.1)
    assert sigma.data[0] == 0.0       # far point: outside every box
    assert sigma.data[1] > 0.0        # torso interior: solidly inside


def test_blended_query_follows_the_pose(body, field_setup):
    """A point on the posed arm keeps high density after reposing."""
    cfg, params = field_setup
    rng = np.random.default_rng(5)
    z_map = rng.standard_normal((8, 8, cfg.z_channels)).astype(np.float32)
    # pick a template point in the middle of some limb
    probe = body.joints[7] + 0.5 * body.lengths[7] * body.axes[7]
    pose = SkeletonPose.identity()
    pose.theta[7] = np.array([0.0, 0.6, 0.0])
    from uvhuman.body import bone_transforms, forward_lbs, query_skin_weights
    wr, wt = bone_transforms(body, pose)
    w = query_skin_weights(body, probe[None])
    moved = forward_lbs(probe[None], w, wr, wt)
    assert np.linalg.norm(moved - probe) > 1e-3  # the pose really moved it
    v = np.array([[0.0, 0.0, 1.0]])
    _, sig_posed = blended_query(params, cfg, body, pose, moved, v, z_map)
    _, sig_rest = blended_query(params, cfg, body, SkeletonPose.identity(),
                                probe[None], v, z_map)
    np.testing.assert_allclose(sig_posed.data, sig_rest.data, rtol=0.05)
