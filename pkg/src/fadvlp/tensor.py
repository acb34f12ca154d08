"""Dense tensors with reverse-mode automatic differentiation.

Tensors hold flat row-major numpy arrays (float32 for training, float64 for
gradient checking). Operations executed while a Tape is active record a
backward rule; Tape.backward replays the records in exact reverse order, so
gradient accumulation order is fixed and replays are bit-identical. Every
forward result is checked for NaN/Inf, which is treated as an error state.
"""

import numpy as np

from . import kernels

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    pass


class NumericsError(FloatingPointError):
    pass


def _check_finite(arr, opname):
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite values produced by {opname}")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_needs_grad")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self._needs_grad = self.requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return mul(self, 1.0 / float(scalar))

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered record of operations; backward walks it in exact reverse."""

    _active = None

    def __init__(self):
        self.records = []  # (out_tensor, input_tensors, backward_fn)

    def __enter__(self):
        if Tape._active is not None:
            raise RuntimeError("a Tape is already active (tapes are single-threaded)")
        Tape._active = self
        return self

    def __exit__(self, *exc):
        Tape._active = None
        return False

    @staticmethod
    def active():
        return Tape._active

    def record(self, out, inputs, backward_fn):
        self.records.append((out, inputs, backward_fn))

    def backward(self, loss):
        return backward(loss, self)


def _as_tensor(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype))


def _result(data, inputs, backward_fn, opname):
    _check_finite(data, opname)
    out = Tensor(data)
    out._needs_grad = any(t._needs_grad for t in inputs)
    tape = Tape.active()
    if tape is not None and out._needs_grad:
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(grad, shape):
    """Sum a broadcasted gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


def backward(loss, tape):
    """Populate .grad for every requires_grad tensor the tape touched."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    for out, inputs, backward_fn in reversed(tape.records):
        for t in inputs:
            if t.requires_grad:
                leaves[id(t)] = t
        if out.requires_grad:
            leaves[id(out)] = out
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for t, gin in zip(inputs, backward_fn(g)):
            if gin is None or not t._needs_grad:
                continue
            acc = grads.get(id(t))
            grads[id(t)] = gin if acc is None else acc + gin
    for key, t in leaves.items():
        g = grads.get(key)
        t.grad = np.zeros_like(t.data) if g is None else np.ascontiguousarray(g)
    if loss.requires_grad and id(loss) not in leaves:
        loss.grad = np.ones_like(loss.data)


# ---------------------------------------------------------------------------
# elementwise & arithmetic primitives


def add(a, b):
    b = _as_tensor(b, a)
    data = a.data + b.data

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(data, (a, b), bwd, "add")


def sub(a, b):
    b = _as_tensor(b, a)
    data = a.data - b.data

    def bwd(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _result(data, (a, b), bwd, "sub")


def mul(a, b):
    b = _as_tensor(b, a)
    ad, bd = a.data, b.data
    data = ad * bd

    def bwd(g):
        return _unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)

    return _result(data, (a, b), bwd, "mul")


def tanh(a):
    data = np.tanh(a.data)

    def bwd(g):
        return (g * (1.0 - data * data),)

    return _result(data, (a,), bwd, "tanh")


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a):
    """Tanh-approximation GELU (exact derivative of the same approximation)."""
    x = a.data
    u = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    data = 0.5 * x * (1.0 + t)

    def bwd(g):
        du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)

    return _result(data, (a,), bwd, "gelu")


def dropout(a, rate, rng):
    """Inverted dropout; identity at rate 0. rng is an explicit Generator."""
    if rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.dtype) / (1.0 - rate)

    def bwd(g):
        return (g * keep,)

    return _result(a.data * keep, (a,), bwd, "dropout")


# ---------------------------------------------------------------------------
# linear algebra & shape primitives


def matmul(a, b):
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    data = np.matmul(ad, bd)

    def bwd(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(bd, -1, -2)), a.shape)
        gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), b.shape)
        return ga, gb

    return _result(data, (a, b), bwd, "matmul")


def transpose(a):
    """Swap the last two axes."""
    data = np.ascontiguousarray(np.swapaxes(a.data, -1, -2))

    def bwd(g):
        return (np.swapaxes(g, -1, -2),)

    return _result(data, (a,), bwd, "transpose")


def permute(a, axes):
    axes = tuple(axes)
    inv = np.argsort(axes)
    data = np.ascontiguousarray(np.transpose(a.data, axes))

    def bwd(g):
        return (np.ascontiguousarray(np.transpose(g, inv)),)

    return _result(data, (a,), bwd, "permute")


def reshape(a, shape):
    data = a.data.reshape(shape)

    def bwd(g):
        return (g.reshape(a.shape),)

    return _result(data, (a,), bwd, "reshape")


def concat(tensors, axis):
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _result(data, tuple(tensors), bwd, "concat")


def slice_axis(a, axis, start, stop):
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    data = np.ascontiguousarray(a.data[idx])

    def bwd(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _result(data, (a,), bwd, "slice")


def embedding(table, ids):
    """Gather rows of `table` [V,D] at integer `ids` [...] -> [..., D]."""
    ids = np.asarray(ids)
    data = table.data[ids]

    def bwd(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[-1]))
        return (gt,)

    return _result(data, (table,), bwd, "embedding")


def select_positions(x, positions):
    """Pick one row per batch element: x [B,L,D], positions [B] -> [B,D]."""
    positions = np.asarray(positions)
    bidx = np.arange(x.shape[0])
    data = x.data[bidx, positions]

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[bidx, positions] = g
        return (gx,)

    return _result(data, (x,), bwd, "select_positions")


def sum_(a, axis=None, keepdims=False):
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).astype(a.dtype),)
        g2 = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g2, a.shape).astype(a.dtype),)

    return _result(data, (a,), bwd, "sum")


def mean(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else np.prod([a.shape[ax] for ax in np.atleast_1d(axis)])
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


# ---------------------------------------------------------------------------
# normalization / softmax family


def softmax(x, axis=-1):
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        return (data * (g - (g * data).sum(axis=axis, keepdims=True)),)

    return _result(data, (x,), bwd, "softmax")


def log_softmax(x, axis=-1):
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    data = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    sm = np.exp(data)

    def bwd(g):
        return (g - sm * g.sum(axis=axis, keepdims=True),)

    return _result(data, (x,), bwd, "log_softmax")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine."""
    if gain.shape != (x.shape[-1],) or bias.shape != (x.shape[-1],):
        raise ShapeError("layer_norm gain/bias must match the last dimension")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = gain.data * xhat + bias.data

    def bwd(g):
        red = tuple(range(g.ndim - 1))
        ggain = (g * xhat).sum(axis=red)
        gbias = g.sum(axis=red)
        gh = g * gain.data
        gx = inv * (gh - gh.mean(axis=-1, keepdims=True) - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        return gx, ggain, gbias

    return _result(data, (x, gain, bias), bwd, "layer_norm")


def l2_normalize(x, axis=-1, eps=1e-12):
    """Scale slices along `axis` to unit norm (1/eps scaling below eps)."""
    n = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True))
    denom = np.maximum(n, eps)
    data = x.data / denom
    big = n > eps

    def bwd(g):
        proj = (g * data).sum(axis=axis, keepdims=True)
        return (np.where(big, (g - data * proj) / denom, g / eps),)

    return _result(data, (x,), bwd, "l2_normalize")


def cross_entropy_with_logits(logits, targets, ignore_id=None):
    """Mean of -log softmax(logits)[target] over rows whose target != ignore_id."""
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy expects [n, V] logits, got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (logits.shape[0],):
        raise ShapeError("one target id per logits row required")
    keep = np.ones_like(targets, dtype=bool) if ignore_id is None else targets != ignore_id
    n_eff = int(keep.sum())
    if n_eff == 0:
        raise ValueError("cross_entropy: every target is ignored")
    v = logits.shape[1]
    safe = np.where(keep, targets, 0)
    if safe.min() < 0 or safe.max() >= v:
        raise ShapeError("target id outside [0, V)")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    ls = shifted - logz
    rows = np.arange(targets.shape[0])
    data = np.asarray(-(ls[rows, safe] * keep).sum() / n_eff, dtype=logits.dtype)

    def bwd(g):
        sm = np.exp(ls)
        grad = sm.copy()
        grad[rows, safe] -= 1.0
        grad *= (keep / n_eff)[:, None]
        return (g * grad,)

    return _result(data, (logits,), bwd, "cross_entropy")


# ---------------------------------------------------------------------------
# convolution (backend-selected kernels)


def conv2d(x, w, b=None, stride=1, pad=0):
    """x [B,C,H,W], w [O,C,kh,kw], optional b [O] -> [B,O,OH,OW]."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv2d shape mismatch: x {x.shape}, w {w.shape}")
    bias = None if b is None else b.data
    data = kernels.conv2d_forward(x.data, w.data, bias, stride, pad)
    inputs = (x, w) if b is None else (x, w, b)

    def bwd(g):
        g = np.ascontiguousarray(g)
        gx = kernels.conv2d_backward_input(g, w.data, x.shape, stride, pad)
        gw, gb = kernels.conv2d_backward_weights(g, x.data, w.shape, stride, pad)
        return (gx, gw) if b is None else (gx, gw, gb)

    return _result(data, inputs, bwd, "conv2d")
