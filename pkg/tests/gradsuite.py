"""Shared finite-difference gradient harness.

Each case builds a scalar-valued function of one float64 input array; the
analytic gradient from the tape is compared against central differences.
Used by the unit tests and by the acceptance gradient sweep.
"""

import numpy as np

from fadvlp import tensor as T
from fadvlp.gradcheck import finite_difference_gradient, max_relative_error


def fd_check(f, x0, h=1e-5):
    """Return max relative error between tape gradient and central differences."""
    x = T.Tensor(np.asarray(x0, dtype=np.float64), requires_grad=True, dtype=np.float64)
    with T.Tape() as tape:
        loss = f(x)
    T.backward(loss, tape)
    numeric = finite_difference_gradient(f, x0, h=h)
    return max_relative_error(x.grad, numeric)


def _wsum(t, rng):
    # random weighting makes the scalar sensitive to every coordinate
    r = T.Tensor(rng.standard_normal(t.shape), dtype=np.float64)
    return T.sum_(T.mul(t, r))


def primitive_cases(rng):
    """(name, f, x0) triples covering every differentiable primitive."""
    cases = []

    def case(name, f, x0):
        cases.append((name, f, np.asarray(x0, dtype=np.float64)))

    c = T.Tensor(rng.standard_normal((3, 4)), dtype=np.float64)
    case("add", lambda x, c=c, r=rng.integers(1 << 30): _wsum(T.add(x, c), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("sub", lambda x, c=c, r=rng.integers(1 << 30): _wsum(T.sub(c, x), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("mul", lambda x, c=c, r=rng.integers(1 << 30): _wsum(T.mul(x, c), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("mul_self", lambda x, r=rng.integers(1 << 30): _wsum(T.mul(x, x), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("mul_broadcast", lambda x, c=c, r=rng.integers(1 << 30): _wsum(T.mul(c, x), np.random.default_rng(r)), rng.standard_normal((4,)))

    m = T.Tensor(rng.standard_normal((4, 5)), dtype=np.float64)
    case("matmul_lhs", lambda x, m=m, r=rng.integers(1 << 30): _wsum(T.matmul(x, m), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    lhs = T.Tensor(rng.standard_normal((3, 4)), dtype=np.float64)
    case("matmul_rhs", lambda x, a=lhs, r=rng.integers(1 << 30): _wsum(T.matmul(a, x), np.random.default_rng(r)), rng.standard_normal((4, 5)))
    case(
        "matmul_batched",
        lambda x, m=m, r=rng.integers(1 << 30): _wsum(T.matmul(x, m), np.random.default_rng(r)),
        rng.standard_normal((2, 3, 4)),
    )

    case("transpose", lambda x, r=rng.integers(1 << 30): _wsum(T.transpose(x), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("permute", lambda x, r=rng.integers(1 << 30): _wsum(T.permute(x, (1, 2, 0)), np.random.default_rng(r)), rng.standard_normal((2, 3, 4)))
    case("reshape", lambda x, r=rng.integers(1 << 30): _wsum(T.reshape(x, (4, 3)), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case(
        "concat",
        lambda x, c=c, r=rng.integers(1 << 30): _wsum(T.concat([x, c], axis=0), np.random.default_rng(r)),
        rng.standard_normal((2, 4)),
    )
    case("slice", lambda x, r=rng.integers(1 << 30): _wsum(T.slice_axis(x, 1, 1, 3), np.random.default_rng(r)), rng.standard_normal((3, 4)))

    ids = rng.integers(0, 6, size=(2, 5))
    case("embedding", lambda x, ids=ids, r=rng.integers(1 << 30): _wsum(T.embedding(x, ids), np.random.default_rng(r)), rng.standard_normal((6, 3)))
    pos = rng.integers(0, 4, size=3)
    case(
        "select_positions",
        lambda x, pos=pos, r=rng.integers(1 << 30): _wsum(T.select_positions(x, pos), np.random.default_rng(r)),
        rng.standard_normal((3, 4, 2)),
    )

    case("sum_all", lambda x: T.sum_(x), rng.standard_normal((3, 4)))
    case("sum_axis", lambda x, r=rng.integers(1 << 30): _wsum(T.sum_(x, axis=0), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("mean", lambda x, r=rng.integers(1 << 30): _wsum(T.mean(x, axis=1), np.random.default_rng(r)), rng.standard_normal((3, 4)))

    case("gelu", lambda x, r=rng.integers(1 << 30): _wsum(T.gelu(x), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("tanh", lambda x, r=rng.integers(1 << 30): _wsum(T.tanh(x), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("softmax", lambda x, r=rng.integers(1 << 30): _wsum(T.softmax(x, axis=-1), np.random.default_rng(r)), rng.standard_normal((3, 4)))
    case("log_softmax", lambda x, r=rng.integers(1 << 30): _wsum(T.log_softmax(x, axis=-1), np.random.default_rng(r)), rng.standard_normal((3, 4)))

    gain = T.Tensor(rng.standard_normal(4) + 1.0, dtype=np.float64)
    bias = T.Tensor(rng.standard_normal(4), dtype=np.float64)
    xln = T.Tensor(rng.standard_normal((3, 4)), dtype=np.float64)
    case(
        "layer_norm_x",
        lambda x, g=gain, b=bias, r=rng.integers(1 << 30): _wsum(T.layer_norm(x, g, b), np.random.default_rng(r)),
        rng.standard_normal((3, 4)),
    )
    case(
        "layer_norm_gain",
        lambda g, x=xln, b=bias, r=rng.integers(1 << 30): _wsum(T.layer_norm(x, g, b), np.random.default_rng(r)),
        rng.standard_normal(4),
    )
    case(
        "layer_norm_bias",
        lambda b, x=xln, g=gain, r=rng.integers(1 << 30): _wsum(T.layer_norm(x, g, b), np.random.default_rng(r)),
        rng.standard_normal(4),
    )
    case("l2_normalize", lambda x, r=rng.integers(1 << 30): _wsum(T.l2_normalize(x, axis=-1), np.random.default_rng(r)), rng.standard_normal((3, 4)) * 2)

    tgt = rng.integers(0, 5, size=4)
    tgt[0] = -1
    case(
        "cross_entropy",
        lambda x, t=tgt: T.cross_entropy_with_logits(x, t, ignore_id=-1),
        rng.standard_normal((4, 5)),
    )

    w = T.Tensor(rng.standard_normal((4, 3, 3, 3)) * 0.5, dtype=np.float64)
    cb = T.Tensor(rng.standard_normal(4) * 0.1, dtype=np.float64)
    ximg = T.Tensor(rng.standard_normal((2, 3, 6, 6)), dtype=np.float64)
    case(
        "conv2d_x",
        lambda x, w=w, b=cb, r=rng.integers(1 << 30): _wsum(T.conv2d(x, w, b, stride=2, pad=1), np.random.default_rng(r)),
        rng.standard_normal((2, 3, 6, 6)),
    )
    case(
        "conv2d_w",
        lambda w, x=ximg, b=cb, r=rng.integers(1 << 30): _wsum(T.conv2d(x, w, b, stride=2, pad=1), np.random.default_rng(r)),
        rng.standard_normal((4, 3, 3, 3)) * 0.5,
    )
    case(
        "conv2d_b",
        lambda b, x=ximg, w=w, r=rng.integers(1 << 30): _wsum(T.conv2d(x, w, b, stride=2, pad=1), np.random.default_rng(r)),
        rng.standard_normal(4) * 0.1,
    )

    case(
        "dropout",
        lambda x, r=rng.integers(1 << 30): _wsum(
            T.dropout(x, 0.3, np.random.default_rng(1234)), np.random.default_rng(r)
        ),
        rng.standard_normal((3, 4)),
    )
    return cases
