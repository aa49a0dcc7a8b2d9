"""Autodiff core: dtype policy, op semantics, gradient API."""

import threading

import numpy as np
import pytest

from uvhuman.numerics import tensor as T
from uvhuman.numerics.gradcheck import check_op
from uvhuman.numerics.tensor import Tensor, grad, precision


def test_default_dtype_is_float32():
    t = Tensor(np.arange(4, dtype=np.float64))
    assert t.data.dtype == np.float32
    assert not t.requires_grad


def test_precision_context_switches_dtype():
    with precision("float64"):
        t = Tensor(np.arange(4))
        assert t.data.dtype == np.float64
    t2 = Tensor(np.arange(4))
    assert t2.data.dtype == np.float32


def test_scalar_arithmetic_casts_to_tensor_dtype():
    with precision("float64"):
        t = Tensor(np.ones(3), requires_grad=True)
        out = t * 2.0 + 1.0
        assert out.data.dtype == np.float64
        np.testing.assert_array_equal(out.data, np.full(3, 3.0))


def test_backward_writes_grad_attribute():
    x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    loss = T.sum_(x * x)
    loss.backward()
    np.testing.assert_allclose(x.grad, 2.0 * x.data, rtol=1e-6)


def test_grad_functional_returns_zeros_for_unreachable():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(3), requires_grad=True)
    loss = T.sum_(x * 3.0)
    gx, gy = grad(loss, [x, y])
    np.testing.assert_array_equal(gx, np.full(3, 3.0, dtype=np.float32))
    np.testing.assert_array_equal(gy, np.zeros(3))


def test_grad_is_thread_safe():
    """Concurrent backward passes over one shared graph input agree with serial."""
    base = Tensor(np.linspace(-1, 1, 8), requires_grad=True)

    def make_loss(k):
        return T.sum_(T.exp(base * float(k)))

    serial = [grad(make_loss(k), [base])[0] for k in range(1, 5)]
    results = [None] * 4

    def worker(i):
        results[i] = grad(make_loss(i + 1), [base])[0]

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for s, r in zip(serial, results):
        np.testing.assert_array_equal(s, r)


def test_broadcast_add_unbroadcasts_gradient():
    a = Tensor(np.ones((3, 1)), requires_grad=True)
    b = Tensor(np.ones((1, 4)), requires_grad=True)
    loss = T.sum_(a + b)
    ga, gb = grad(loss, [a, b])
    np.testing.assert_array_equal(ga, np.full((3, 1), 4.0, dtype=np.float32))
    np.testing.assert_array_equal(gb, np.full((1, 4), 3.0, dtype=np.float32))


def test_cumsum_exclusive_oracle():
    x = Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))
    out = T.cumsum(x, axis=1, exclusive=True)
    np.testing.assert_array_equal(out.data, np.array([[0.0, 1.0, 3.0, 6.0]],
                                                     dtype=np.float32))


def test_cumsum_inclusive_matches_numpy():
    arr = np.random.default_rng(0).standard_normal((3, 5))
    out = T.cumsum(Tensor(arr), axis=1)
    np.testing.assert_allclose(out.data, np.cumsum(arr, axis=1), rtol=1e-6)


def test_grid_bilinear_matches_manual_interpolation():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((4, 5, 2))
    u, v = np.array([0.5]), np.array([0.5])  # dead center of the map
    out = T.grid_bilinear(Tensor(z), u, v)
    # center of a 4x5 grid: u coord 1.5 between rows 1,2; v coord 2 on col 2
    want = 0.5 * (z[1, 2] + z[2, 2])
    np.testing.assert_allclose(out.data[0], want.astype(np.float32), rtol=1e-5)


def test_grid_bilinear_clamps_at_edges():
    z = np.arange(12, dtype=np.float64).reshape(3, 4, 1)
    out = T.grid_bilinear(Tensor(z), np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    np.testing.assert_allclose(out.data[:, 0], [z[0, 0, 0], z[2, 3, 0]], rtol=1e-6)


def test_conv2d_matches_naive_loops():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((1, 2, 5, 5))
    w = rng.standard_normal((3, 2, 3, 3))
    out = T.conv2d(Tensor(x), Tensor(w), stride=1, padding=1).data
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    want = np.zeros((1, 3, 5, 5))
    for o in range(3):
        for i in range(5):
            for j in range(5):
                want[0, o, i, j] = np.sum(xp[0, :, i:i + 3, j:j + 3] * w[o])
    np.testing.assert_allclose(out, want, rtol=1e-4, atol=1e-5)


def test_upsample2x_bilinear_properties():
    x = np.arange(4, dtype=np.float64).reshape(1, 1, 2, 2)
    out = T.upsample2x(Tensor(x)).data[0, 0]
    assert out.shape == (4, 4)
    # corners reproduce the inputs; interior values interpolate between them
    assert out[0, 0] == 0.0 and out[-1, -1] == 3.0
    assert out.min() >= 0.0 and out.max() <= 3.0
    # a constant image upsamples to the same constant exactly
    const = T.upsample2x(Tensor(np.full((1, 2, 3, 3), 7.0))).data
    np.testing.assert_array_equal(const, np.full((1, 2, 6, 6), 7.0, np.float32))


def test_take_then_scatter_add_sums_duplicates():
    x = Tensor(np.eye(3), requires_grad=True)
    idx = np.array([0, 2, 2])
    taken = T.take(x, idx, axis=0)
    back = T.scatter_add(taken, idx, num_rows=3)
    want = np.eye(3)
    want[1] = 0.0   # row 1 never taken
    want[2] *= 2.0  # row 2 taken twice
    np.testing.assert_array_equal(back.data, want.astype(np.float32))


def test_scatter_add_accepts_1d_values():
    vals = Tensor(np.array([1.0, 2.0, 3.0]))
    out = T.scatter_add(vals, np.array([1, 1, 0]), num_rows=3)
    np.testing.assert_array_equal(out.data, np.array([3.0, 3.0, 0.0], np.float32))


def test_matmul_gradient_oracle():
    a = Tensor(np.array([[1.0, 2.0]]), requires_grad=True)
    b = Tensor(np.array([[3.0], [4.0]]), requires_grad=True)
    loss = T.sum_(a @ b)
    ga, gb = grad(loss, [a, b])
    np.testing.assert_array_equal(ga, b.data.T)
    np.testing.assert_array_equal(gb, a.data.T)


def test_maximum_routes_gradient_by_branch():
    x = Tensor(np.array([-2.0, 3.0]), requires_grad=True)
    loss = T.sum_(T.maximum(x, 0.0))
    (g,) = grad(loss, [x])
    np.testing.assert_array_equal(g, np.array([0.0, 1.0], dtype=np.float32))


@pytest.mark.parametrize("name", ["mul", "exp", "matmul", "grid_bilinear",
                                  "conv2d", "cumsum", "scatter_add"])
def test_spot_gradcheck(name):
    assert check_op(name, seed=3) < 1e-3


def test_every_registered_op_has_a_gradcheck_case():
    from uvhuman.numerics.gradcheck import OP_CASES
    assert set(T.OPS) <= set(OP_CASES)
