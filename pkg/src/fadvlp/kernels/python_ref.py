"""Pure-numpy convolution kernels (fallback backend).

Forward uses im2col via sliding windows; the input-gradient scatter is done
as one strided slice-add per kernel offset, which avoids np.add.at.
All arrays are NCHW / OCHW, float32 or float64.
"""

import numpy as np


def _out_size(size, k, stride, pad):
    return (size + 2 * pad - k) // stride + 1


def _windows(x, kh, kw, stride, pad):
    # x: [B,C,H,W] -> [B,C,OH,OW,kh,kw]
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def conv2d_forward(x, w, b, stride, pad):
    """x [B,C,H,W], w [O,C,kh,kw], b [O] -> y [B,O,OH,OW]."""
    kh, kw = w.shape[2], w.shape[3]
    win = _windows(x, kh, kw, stride, pad)
    y = np.einsum("bchwij,ocij->bohw", win, w, optimize=True)
    if b is not None:
        y += b[None, :, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward_input(gy, w, x_shape, stride, pad):
    """gy [B,O,OH,OW] -> gx with x_shape [B,C,H,W]."""
    B, C, H, W = x_shape
    kh, kw = w.shape[2], w.shape[3]
    oh, ow = gy.shape[2], gy.shape[3]
    gxp = np.zeros((B, C, H + 2 * pad, W + 2 * pad), dtype=gy.dtype)
    # per-offset contribution: gxp[:, :, i + s*oh_grid, j + s*ow_grid] += gy . w[:, :, i, j]
    g = np.einsum("bohw,ocij->bcijhw", gy, w, optimize=True)
    for i in range(kh):
        for j in range(kw):
            gxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += g[:, :, i, j]
    if pad:
        gxp = gxp[:, :, pad:-pad, pad:-pad]
    return np.ascontiguousarray(gxp)


def conv2d_backward_weights(gy, x, w_shape, stride, pad):
    """gy [B,O,OH,OW], x [B,C,H,W] -> (gw [O,C,kh,kw], gb [O])."""
    kh, kw = w_shape[2], w_shape[3]
    win = _windows(x, kh, kw, stride, pad)
    gw = np.einsum("bohw,bchwij->ocij", gy, win, optimize=True)
    gb = gy.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(gw), gb
