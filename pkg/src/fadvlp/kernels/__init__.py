"""Convolution kernel backend selection.

Prefers the compiled Cython extension when it was built; otherwise falls back
to the numpy reference implementation. FADVLP_BACKEND=python|compiled forces
a choice (forcing `compiled` raises if the extension is unavailable).
"""

import os

from . import python_ref

try:
    from . import _convops

    _HAVE_COMPILED = True
except ImportError:
    _convops = None
    _HAVE_COMPILED = False


def _select(name):
    if name == "python":
        return python_ref, "python"
    if name == "compiled":
        if not _HAVE_COMPILED:
            raise RuntimeError("FADVLP_BACKEND=compiled but the extension is not built")
        return _convops, "compiled"
    if name in ("", "auto"):
        if _HAVE_COMPILED:
            return _convops, "compiled"
        return python_ref, "python"
    raise ValueError(f"unknown FADVLP_BACKEND value: {name!r}")


_impl, BACKEND = _select(os.environ.get("FADVLP_BACKEND", "auto"))

conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weights = _impl.conv2d_backward_weights


def get_backend(name):
    """Return (module, label) for an explicit backend name; used by benchmarks/tests."""
    return _select(name)


def available_backends():
    names = ["python"]
    if _HAVE_COMPILED:
        names.append("compiled")
    return names
