"""Pure numpy implementations of the 1-D convolution kernels.

These are the fallback for :mod:`tsdaug.engine._ckernels`.  Both backends
share one lowering: gather the padded input into an im2col matrix of shape
(C_in*K, B*L_out) and contract it against the (C_out, C_in*K) weight matrix
with a single BLAS call.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def _im2col(xp: np.ndarray, k: int, stride: int, l_out: int) -> np.ndarray:
    # xp: padded input (B, C, Lp) -> (C*K, B*L_out)
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    c = xp.shape[1]
    return np.ascontiguousarray(windows.transpose(1, 3, 0, 2)).reshape(c * k, -1)


def _pad(x: np.ndarray, pad_l: int, pad_r: int) -> np.ndarray:
    if pad_l == 0 and pad_r == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad_l, pad_r)))


def conv1d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad_l: int, pad_r: int) -> np.ndarray:
    b, _, l_in = x.shape
    c_out, c_in, k = w.shape
    l_out = (l_in + pad_l + pad_r - k) // stride + 1
    cols = _im2col(_pad(x, pad_l, pad_r), k, stride, l_out)
    y2 = w.reshape(c_out, c_in * k) @ cols
    return np.ascontiguousarray(y2.reshape(c_out, b, l_out).transpose(1, 0, 2))


def conv1d_backward_x(
    dy: np.ndarray, w: np.ndarray, stride: int, pad_l: int, pad_r: int, l_in: int
) -> np.ndarray:
    b, c_out, l_out = dy.shape
    _, c_in, k = w.shape
    dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2)).reshape(c_out, b * l_out)
    dcols = w.reshape(c_out, c_in * k).T @ dy2
    dcols = dcols.reshape(c_in, k, b, l_out)
    dxp = np.zeros((b, c_in, l_in + pad_l + pad_r), dtype=dy.dtype)
    span = stride * (l_out - 1) + 1
    for j in range(k):  # windows overlap, accumulate tap by tap
        dxp[:, :, j : j + span : stride] += dcols[:, j].transpose(1, 0, 2)
    return np.ascontiguousarray(dxp[:, :, pad_l : pad_l + l_in])


def conv1d_backward_w(
    dy: np.ndarray, x: np.ndarray, k: int, stride: int, pad_l: int, pad_r: int
) -> np.ndarray:
    b, c_out, l_out = dy.shape
    c_in = x.shape[1]
    cols = _im2col(_pad(x, pad_l, pad_r), k, stride, l_out)
    dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2)).reshape(c_out, b * l_out)
    return (dy2 @ cols.T).reshape(c_out, c_in, k)
