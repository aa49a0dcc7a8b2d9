"""Finite-difference verification of every registered op.

Each case builds small float64 inputs, contracts the op output against a
fixed random sensitivity so the full Jacobian is exercised through one
scalar, and compares reverse-mode gradients with central differences.
Nonsmooth ops are sampled away from their kinks.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import OPS, Tensor, grad


def central_diff(f, x, h=1e-5):
    """Central-difference gradient of a scalar function of one array."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g


def _away_from(rng, shape, lo=0.3, hi=1.5):
    """Values bounded away from zero, random signs."""
    mag = rng.uniform(lo, hi, size=shape)
    return mag * rng.choice([-1.0, 1.0], size=shape)


def _case_unary(op, sampler):
    def factory(rng):
        x = sampler(rng)
        return [x], lambda ts: T.apply(op, [ts[0]])
    return factory


def _case_binary(op):
    def factory(rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4)) if op != "div" else _away_from(rng, (3, 4))
        return [a, b], lambda ts: T.apply(op, [ts[0], ts[1]])
    return factory


OP_CASES = {
    "add": _case_binary("add"),
    "sub": _case_binary("sub"),
    "mul": _case_binary("mul"),
    "div": _case_binary("div"),
    "neg": _case_unary("neg", lambda rng: rng.standard_normal((3, 4))),
    "abs": _case_unary("abs", lambda rng: _away_from(rng, (3, 4))),
    "exp": _case_unary("exp", lambda rng: rng.standard_normal((3, 4))),
    "log": _case_unary("log", lambda rng: rng.uniform(0.3, 2.0, size=(3, 4))),
    "sin": _case_unary("sin", lambda rng: rng.standard_normal((3, 4))),
    "cos": _case_unary("cos", lambda rng: rng.standard_normal((3, 4))),
    "sigmoid": _case_unary("sigmoid", lambda rng: rng.standard_normal((3, 4))),
    "softplus": _case_unary("softplus", lambda rng: rng.standard_normal((3, 4))),
    "sqrt": _case_unary("sqrt", lambda rng: rng.uniform(0.3, 2.0, size=(3, 4))),
}


def _register_cases():
    def power_case(rng):
        x = rng.uniform(0.3, 2.0, size=(3, 4))
        return [x], lambda ts: T.power(ts[0], 2.5)

    def leaky_case(rng):
        return [_away_from(rng, (3, 4))], lambda ts: T.leaky_relu(ts[0], alpha=0.2)

    def maximum_case(rng):
        x = _away_from(rng, (3, 4), lo=0.3, hi=1.5)
        return [x], lambda ts: T.maximum(ts[0], 0.0)

    def matmul_case(rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 2))
        return [a, b], lambda ts: T.matmul(ts[0], ts[1])

    def sum_case(rng):
        return [rng.standard_normal((3, 4))], lambda ts: T.sum_(ts[0], axis=1)

    def mean_case(rng):
        return [rng.standard_normal((3, 4))], lambda ts: T.mean(ts[0], axis=0)

    def cumsum_case(rng):
        return [rng.standard_normal((3, 5))], \
            lambda ts: T.cumsum(ts[0], axis=1, exclusive=True)

    def reshape_case(rng):
        return [rng.standard_normal((3, 4))], lambda ts: T.reshape(ts[0], (2, 6))

    def transpose_case(rng):
        return [rng.standard_normal((2, 3, 4))], lambda ts: T.transpose(ts[0], (2, 0, 1))

    def slice_case(rng):
        return [rng.standard_normal((4, 5))], \
            lambda ts: T.slice_(ts[0], (slice(1, 3), slice(None, 4)))

    def concat_case(rng):
        a = rng.standard_normal((2, 3))
        b = rng.standard_normal((4, 3))
        return [a, b], lambda ts: T.concat([ts[0], ts[1]], axis=0)

    def take_case(rng):
        idx = np.array([0, 2, 2, 1])
        return [rng.standard_normal((3, 4))], lambda ts: T.take(ts[0], idx, axis=0)

    def scatter_case(rng):
        idx = np.array([1, 0, 3, 1])
        return [rng.standard_normal((4, 2))], \
            lambda ts: T.scatter_add(ts[0], idx, num_rows=5)

    def grid_case(rng):
        u = rng.uniform(0.05, 0.95, size=6)
        v = rng.uniform(0.05, 0.95, size=6)
        return [rng.standard_normal((4, 4, 2))], \
            lambda ts: T.grid_bilinear(ts[0], u, v)

    def conv_case(rng):
        x = rng.standard_normal((1, 2, 5, 5))
        w = rng.standard_normal((3, 2, 3, 3))
        return [x, w], lambda ts: T.conv2d(ts[0], ts[1], stride=1, padding=1)

    def up_case(rng):
        return [rng.standard_normal((1, 2, 3, 4))], lambda ts: T.upsample2x(ts[0])

    OP_CASES.update({
        "power": power_case, "leaky_relu": leaky_case, "maximum": maximum_case,
        "matmul": matmul_case, "sum": sum_case, "mean": mean_case,
        "cumsum": cumsum_case, "reshape": reshape_case, "transpose": transpose_case,
        "slice": slice_case, "concat": concat_case, "take": take_case,
        "scatter_add": scatter_case, "grid_bilinear": grid_case,
        "conv2d": conv_case, "upsample2x": up_case,
    })


_register_cases()


def check_op(name, seed=0, h=1e-5):
    """Max relative error between reverse-mode and central-difference gradients."""
    rng = np.random.default_rng(seed)
    arrays, call = OP_CASES[name](rng)
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    params = [Tensor(a, requires_grad=True, dtype=np.float64) for a in arrays]
    out = call(params)
    sens = rng.standard_normal(out.shape)
    loss = T.sum_(T.mul(out, Tensor(sens, dtype=np.float64)))
    ad = grad(loss, params)

    worst = 0.0
    for arr, t, g_ad in zip(arrays, params, ad):
        def scalar():
            t.data = arr  # FD perturbs arr in place; keep tensor view fresh
            val = call(params)
            return float(np.sum(val.data * sens))

        g_fd = central_diff(scalar, arr, h=h)
        scale = max(np.max(np.abs(g_fd)), 1e-8)
        worst = max(worst, float(np.max(np.abs(g_ad - g_fd))) / scale)
    return worst


def check_all_ops(seed=0):
    """Run the finite-difference check on every registered op."""
    missing = sorted(set(OPS) - set(OP_CASES))
    if missing:
        raise RuntimeError(f"ops without gradient-check cases: {missing}")
    return {name: check_op(name, seed=seed) for name in sorted(OP_CASES)}
