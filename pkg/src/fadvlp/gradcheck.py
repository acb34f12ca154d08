"""Central-difference gradient oracle used by the test suite."""

import numpy as np

from .tensor import Tensor


def finite_difference_gradient(f, x, h=1e-5):
    """Per-coordinate central differences of a scalar function.

    f takes a Tensor and returns a float (or scalar Tensor); x is an ndarray.
    Use float64 inputs: float32 differences are dominated by rounding noise.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = _eval(f, x)
        flat[i] = orig - h
        fm = _eval(f, x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def _eval(f, x):
    out = f(Tensor(x.copy(), dtype=np.float64))
    return out.item() if isinstance(out, Tensor) else float(out)


def max_relative_error(analytic, numeric, floor=1e-4):
    """max |a-n| / max(|a|, |n|, floor); the floor keeps near-zero coords sane."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
