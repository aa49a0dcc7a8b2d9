"""Humanoid template, UV atlas, skinning, and mesh queries."""

import numpy as np
import pytest

from uvhuman.body import (
    N_PARTS,
    PARENTS,
    PART_NAMES,
    UV_CHARTS,
    ShapeParams,
    SkeletonPose,
    bone_transforms,
    build_body,
    capsule_contains,
    forward_lbs,
    inverse_lbs,
    nearest_faces,
    nearest_faces_brute,
    pose_vertices,
    query_skin_weights,
    ring_camera,
    rodrigues,
    template_distance,
)


@pytest.fixture(scope="module")
def body():
    return build_body()


def test_sixteen_parts_and_rooted_tree():
    assert N_PARTS == 16
    assert len(PARENTS) == len(PART_NAMES) == 16
    roots = [k for k in range(16) if PARENTS[k] == -1]
    assert len(roots) == 1
    # every part reaches the root without a cycle
    for k in range(16):
        seen, cur = set(), k
        while PARENTS[cur] != -1:
            assert cur not in seen
            seen.add(cur)
            cur = PARENTS[cur]
        assert cur == roots[0]


def test_uv_charts_disjoint_inside_unit_square():
    boxes = np.array([UV_CHARTS[name] for name in PART_NAMES])
    assert np.all(boxes >= 0.0) and np.all(boxes <= 1.0)
    assert np.all(boxes[:, 2] > boxes[:, 0]) and np.all(boxes[:, 3] > boxes[:, 1])
    for i in range(N_PARTS):
        for j in range(i + 1, N_PARTS):
            u0, v0, u1, v1 = boxes[i]
            a0, b0, a1, b1 = boxes[j]
            overlap = (min(u1, a1) - max(u0, a0) > 1e-12 and
                       min(v1, b1) - max(v0, b0) > 1e-12)
            assert not overlap, f"charts {i} and {j} overlap"


def test_mesh_is_consistent(body):
    v, f = body.vertices, body.faces
    assert f.min() >= 0 and f.max() < len(v)
    assert body.uv.shape == (len(v), 2)
    assert np.all(body.uv >= 0.0) and np.all(body.uv <= 1.0)
    # vertex UVs live inside the chart of their own part
    for k in range(N_PARTS):
        sel = body.part_of_vertex == k
        u0, v0, u1, v1 = UV_CHARTS[PART_NAMES[k]]
        uv = body.uv[sel]
        assert np.all(uv[:, 0] >= u0 - 1e-9) and np.all(uv[:, 0] <= u1 + 1e-9)
        assert np.all(uv[:, 1] >= v0 - 1e-9) and np.all(uv[:, 1] <= v1 + 1e-9)


def test_skin_weights_are_a_partition(body):
    w = body.skin_weights
    assert w.shape == (len(body.vertices), N_PARTS)
    assert np.all(w >= 0.0)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)
    # each vertex gives most weight to its own part (blend regions cap at 50%)
    own = w[np.arange(len(w)), body.part_of_vertex]
    assert np.all(own >= 0.5 - 1e-9)


def test_shape_params_validated():
    with pytest.raises(ValueError):
        ShapeParams(length=np.full(N_PARTS, 3.0))
    with pytest.raises(ValueError):
        ShapeParams(radius=np.full(N_PARTS, 0.1))
    vec = ShapeParams().to_vector()
    assert vec.shape == (2 * N_PARTS,)
    np.testing.assert_array_equal(ShapeParams.from_vector(vec).to_vector(), vec)


def test_shape_params_scale_the_mesh():
    fat = ShapeParams(radius=np.full(N_PARTS, 1.5))
    b0, b1 = build_body(), build_body(beta=fat)
    assert b1.vertices.shape == b0.vertices.shape
    assert np.ptp(b1.vertices[:, :2]) > np.ptp(b0.vertices[:, :2])
    tall = ShapeParams(length=np.full(N_PARTS, 1.4))
    b2 = build_body(beta=tall)
    assert np.ptp(b2.vertices[:, 2]) > np.ptp(b0.vertices[:, 2])


def test_rodrigues_matches_known_rotation():
    r = rodrigues(np.array([0.0, 0.0, np.pi / 2]))
    want = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(r, want, atol=1e-12)
    np.testing.assert_allclose(rodrigues(np.zeros(3)), np.eye(3), atol=1e-15)


def test_identity_pose_is_identity_transform(body):
    world_r, world_t = bone_transforms(body, SkeletonPose.identity())
    np.testing.assert_allclose(world_r, np.broadcast_to(np.eye(3), (16, 3, 3)),
                               atol=1e-12)
    np.testing.assert_allclose(world_t, 0.0, atol=1e-12)
    np.testing.assert_allclose(pose_vertices(body, SkeletonPose.identity()),
                               body.vertices, atol=1e-12)


def test_child_follows_parent_rotation(body):
    """Rotating only the root part bends every descendant with it."""
    root = PARENTS.index(-1)
    pose = SkeletonPose.identity()
    pose.theta[root] = np.array([0.0, 0.0, 0.4])
    world_r, world_t = bone_transforms(body, pose)
    r_root = rodrigues(pose.theta[root])
    for k in range(N_PARTS):
        np.testing.assert_allclose(world_r[k], r_root, atol=1e-12)


def test_lbs_round_trip(body):
    rng = np.random.default_rng(0)
    pose = SkeletonPose.identity()
    pose.theta = rng.uniform(-0.5, 0.5, (16, 3))
    pose.root_rot = np.array([0.1, -0.2, 0.3])
    pose.root_trans = np.array([0.2, 0.1, -0.05])
    world_r, world_t = bone_transforms(body, pose)

    pts = body.vertices[::7]
    w = body.skin_weights[::7]
    posed = forward_lbs(pts, w, world_r, world_t)
    back = inverse_lbs(posed, w, world_r, world_t)
    assert np.max(np.abs(back - pts)) < 1e-9


def test_pose_vector_round_trip():
    rng = np.random.default_rng(1)
    pose = SkeletonPose.identity()
    pose.theta = rng.uniform(-1, 1, (16, 3))
    pose.root_rot = rng.uniform(-1, 1, 3)
    pose.root_trans = rng.uniform(-1, 1, 3)
    vec = pose.to_vector()
    assert vec.shape == (16 * 3 + 6,)
    back = SkeletonPose.from_vector(vec)
    np.testing.assert_array_equal(back.to_vector(), vec)


def test_nearest_faces_matches_brute_force(body):
    rng = np.random.default_rng(2)
    lo = body.vertices.min(axis=0) - 0.2
    hi = body.vertices.max(axis=0) + 0.2
    pts = rng.uniform(lo, hi, (200, 3))
    fast = nearest_faces(body, pts)
    slow = nearest_faces_brute(body, pts)
    np.testing.assert_allclose(np.abs(fast.dist), np.abs(slow.dist),
                               rtol=0, atol=1e-9)
    # indices may differ only at exact distance ties
    diff = fast.face != slow.face
    assert np.all(np.abs(np.abs(fast.dist[diff]) - np.abs(slow.dist[diff])) < 1e-9)


def test_nearest_face_uv_lies_in_part_chart(body):
    rng = np.random.default_rng(3)
    pts = body.vertices[::11] + rng.normal(0, 0.01, body.vertices[::11].shape)
    hit = nearest_faces(body, pts)
    part = body.part_of_face[hit.face]
    for k in np.unique(part):
        u0, v0, u1, v1 = UV_CHARTS[PART_NAMES[int(k)]]
        uv = hit.uv[part == k]
        assert np.all(uv[:, 0] >= u0 - 1e-6) and np.all(uv[:, 0] <= u1 + 1e-6)
        assert np.all(uv[:, 1] >= v0 - 1e-6) and np.all(uv[:, 1] <= v1 + 1e-6)


def test_template_distance_sign(body):
    root = PARENTS.index(-1)
    j = body.joints[root] + 0.5 * body.lengths[root] * body.axes[root]
    far = np.array([2.0, 2.0, 2.0])
    d = template_distance(body, np.stack([j, far]))
    assert d[0] < 0 < d[1]
    assert capsule_contains(body, j[None])[0]
    assert not capsule_contains(body, far[None])[0]


def test_skin_weight_queries_are_convex(body):
    rng = np.random.default_rng(4)
    pts = rng.uniform(-1, 1, (100, 3)) * 0.5 + np.array([0, 0, 0.9])
    w = query_skin_weights(body, pts)
    assert np.all(w >= -1e-12)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)


def test_ring_camera_rays_hit_the_body(body):
    cam = ring_camera(0, 8, width=32)
    o, d = cam.pixel_rays()
    assert o.shape == d.shape == (cam.width * cam.height, 3)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-9)
    # camera looks at the body: the central ray passes through it
    c = (cam.height // 2) * cam.width + cam.width // 2
    t = np.linspace(0.5, 4.5, 300)
    pts = o[c] + t[:, None] * d[c]
    assert capsule_contains(body, pts).any()


def test_ring_cameras_spread_around_the_body():
    positions = np.stack([ring_camera(i, 8, width=16).position for i in range(8)])
    # all on a circle of the same radius, at 8 distinct azimuths
    r = np.linalg.norm(positions[:, :2], axis=1)
    np.testing.assert_allclose(r, r[0], rtol=1e-9)
    az = np.arctan2(positions[:, 1], positions[:, 0])
    assert len(np.unique(np.round(az, 6))) == 8
