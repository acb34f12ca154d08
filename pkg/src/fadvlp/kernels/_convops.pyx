# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels (hot path of the visual encoder).

Direct convolution over NCHW inputs with an output-channel inner loop so the
compiler can vectorize over the contiguous last axis of the repacked weights.
Loop order is fixed, so results are deterministic run to run.
"""

import numpy as np

cimport cython

ctypedef fused real:
    float
    double


def conv2d_forward(x, w, b, int stride, int pad):
    return _forward(np.ascontiguousarray(x), w, b, stride, pad)


def conv2d_backward_input(gy, w, x_shape, int stride, int pad):
    return _backward_input(np.ascontiguousarray(gy), w, x_shape, stride, pad)


def conv2d_backward_weights(gy, x, w_shape, int stride, int pad):
    return _backward_weights(np.ascontiguousarray(gy), np.ascontiguousarray(x), w_shape, stride, pad)


def _forward(real[:, :, :, ::1] x, w_arr, b_arr, int stride, int pad):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    w_np = np.asarray(w_arr)
    cdef Py_ssize_t O = w_np.shape[0], kh = w_np.shape[2], kw = w_np.shape[3]
    cdef Py_ssize_t OH = (H + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t OW = (W + 2 * pad - kw) // stride + 1
    # repack weights [C,kh,kw,O] so the o-loop reads contiguously
    wr_np = np.ascontiguousarray(np.transpose(w_np, (1, 2, 3, 0)))
    cdef real[:, :, :, ::1] wr = wr_np
    y_np = np.zeros((B, O, OH, OW), dtype=w_np.dtype)
    cdef real[:, :, :, ::1] y = y_np
    acc_np = np.zeros(O, dtype=w_np.dtype)
    cdef real[::1] acc = acc_np
    cdef real[::1] bias
    cdef bint has_bias = b_arr is not None
    if has_bias:
        bias = np.ascontiguousarray(b_arr)
    cdef Py_ssize_t b, oh, ow, c, i, j, o, ih, iw
    cdef real xv
    for b in range(B):
        for oh in range(OH):
            for ow in range(OW):
                if has_bias:
                    for o in range(O):
                        acc[o] = bias[o]
                else:
                    for o in range(O):
                        acc[o] = 0
                for c in range(C):
                    for i in range(kh):
                        ih = oh * stride - pad + i
                        if ih < 0 or ih >= H:
                            continue
                        for j in range(kw):
                            iw = ow * stride - pad + j
                            if iw < 0 or iw >= W:
                                continue
                            xv = x[b, c, ih, iw]
                            if xv != 0:
                                for o in range(O):
                                    acc[o] += xv * wr[c, i, j, o]
                for o in range(O):
                    y[b, o, oh, ow] = acc[o]
    return y_np


def _backward_input(real[:, :, :, ::1] gy, w_arr, x_shape, int stride, int pad):
    cdef Py_ssize_t B = gy.shape[0], O = gy.shape[1], OH = gy.shape[2], OW = gy.shape[3]
    w_np = np.asarray(w_arr)
    cdef Py_ssize_t C = w_np.shape[1], kh = w_np.shape[2], kw = w_np.shape[3]
    cdef Py_ssize_t H = x_shape[2], W = x_shape[3]
    cdef real[:, :, :, ::1] w = w_np
    gx_np = np.zeros((B, C, H, W), dtype=w_np.dtype)
    cdef real[:, :, :, ::1] gx = gx_np
    cdef Py_ssize_t b, o, oh, ow, c, i, j, ih, iw
    cdef real gv
    for b in range(B):
        for o in range(O):
            for oh in range(OH):
                for ow in range(OW):
                    gv = gy[b, o, oh, ow]
                    if gv == 0:
                        continue
                    for c in range(C):
                        for i in range(kh):
                            ih = oh * stride - pad + i
                            if ih < 0 or ih >= H:
                                continue
                            for j in range(kw):
                                iw = ow * stride - pad + j
                                if iw < 0 or iw >= W:
                                    continue
                                gx[b, c, ih, iw] += gv * w[o, c, i, j]
    return gx_np


def _backward_weights(real[:, :, :, ::1] gy, real[:, :, :, ::1] x, w_shape, int stride, int pad):
    cdef Py_ssize_t B = gy.shape[0], O = gy.shape[1], OH = gy.shape[2], OW = gy.shape[3]
    cdef Py_ssize_t C = w_shape[1], kh = w_shape[2], kw = w_shape[3]
    cdef Py_ssize_t H = x.shape[2], W = x.shape[3]
    dtype = np.float32 if real is float else np.float64
    gw_np = np.zeros((O, C, kh, kw), dtype=dtype)
    gb_np = np.zeros(O, dtype=dtype)
    cdef real[:, :, :, ::1] gw = gw_np
    cdef real[::1] gb = gb_np
    cdef Py_ssize_t b, o, oh, ow, c, i, j, ih, iw
    cdef real gv
    for b in range(B):
        for o in range(O):
            for oh in range(OH):
                for ow in range(OW):
                    gv = gy[b, o, oh, ow]
                    gb[o] += gv
                    if gv == 0:
                        continue
                    for c in range(C):
                        for i in range(kh):
                            ih = oh * stride - pad + i
                            if ih < 0 or ih >= H:
                                continue
                            for j in range(kw):
                                iw = ow * stride - pad + j
                                if iw < 0 or iw >= W:
                                    continue
                                gw[o, c, i, j] += gv * x[b, c, ih, iw]
    return gw_np, gb_np
