# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled 1-D convolution kernels.

Same lowering as :mod:`tsdaug.engine.kernels_numpy` (im2col + one BLAS
contraction) but with the gather/scatter/transpose passes fused into C loops,
which removes the Python-level temporaries that dominate at small channel
counts.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm, sgemm

BACKEND_NAME = "compiled"

ctypedef fused floating:
    float
    double


cdef inline void _gemm(floating* a, floating* b, floating* c,
                       char transa, char transb,
                       int m, int n, int k, int lda, int ldb, int ldc) noexcept nogil:
    # Thin wrapper: dispatch on dtype, alpha=1, beta=0.
    cdef float sone = 1.0, szero = 0.0
    cdef double done = 1.0, dzero = 0.0
    if floating is float:
        sgemm(&transa, &transb, &m, &n, &k, &sone, <float*> a, &lda,
              <float*> b, &ldb, &szero, <float*> c, &ldc)
    else:
        dgemm(&transa, &transb, &m, &n, &k, &done, <double*> a, &lda,
              <double*> b, &ldb, &dzero, <double*> c, &ldc)


cdef void _gather_cols(floating[:, :, ::1] x, floating[:, ::1] cols,
                       int k, int stride, int pad_l) noexcept nogil:
    cdef Py_ssize_t b = x.shape[0], c_in = x.shape[1], l_in = x.shape[2]
    cdef Py_ssize_t l_out = cols.shape[1] // b
    cdef Py_ssize_t bi, ci, j, o, src, row
    for ci in range(c_in):
        for j in range(k):
            row = ci * k + j
            for bi in range(b):
                for o in range(l_out):
                    src = o * stride + j - pad_l
                    if 0 <= src < l_in:
                        cols[row, bi * l_out + o] = x[bi, ci, src]


def conv1d_forward(floating[:, :, ::1] x, floating[:, :, ::1] w,
                   int stride, int pad_l, int pad_r):
    cdef Py_ssize_t b = x.shape[0], c_in = x.shape[1], l_in = x.shape[2]
    cdef Py_ssize_t c_out = w.shape[0], k = w.shape[2]
    cdef Py_ssize_t l_out = (l_in + pad_l + pad_r - k) // stride + 1
    dtype = np.float32 if floating is float else np.float64

    cols_arr = np.zeros((c_in * k, b * l_out), dtype=dtype)
    y2_arr = np.empty((c_out, b * l_out), dtype=dtype)
    y_arr = np.empty((b, c_out, l_out), dtype=dtype)
    cdef floating[:, ::1] cols = cols_arr
    cdef floating[:, ::1] y2 = y2_arr
    cdef floating[:, :, ::1] y = y_arr
    cdef floating[:, ::1] w2 = np.asarray(w).reshape(c_out, c_in * k)

    cdef Py_ssize_t bi, co, o
    cdef int bl = <int> (b * l_out), cik = <int> (c_in * k), m = <int> c_out
    with nogil:
        _gather_cols(x, cols, <int> k, stride, pad_l)
        # y2 (c_out, b*l_out) = w2 (c_out, cik) @ cols (cik, b*l_out), row-major
        _gemm(&cols[0, 0], &w2[0, 0], &y2[0, 0], c'N', c'N', bl, m, cik, bl, cik, bl)
        for bi in range(b):
            for co in range(c_out):
                for o in range(l_out):
                    y[bi, co, o] = y2[co, bi * l_out + o]
    return y_arr


def conv1d_backward_x(floating[:, :, ::1] dy, floating[:, :, ::1] w,
                      int stride, int pad_l, int pad_r, int l_in):
    cdef Py_ssize_t b = dy.shape[0], c_out = dy.shape[1], l_out = dy.shape[2]
    cdef Py_ssize_t c_in = w.shape[1], k = w.shape[2]
    dtype = np.float32 if floating is float else np.float64

    dy2_arr = np.empty((c_out, b * l_out), dtype=dtype)
    dcols_arr = np.empty((c_in * k, b * l_out), dtype=dtype)
    dx_arr = np.zeros((b, c_in, l_in), dtype=dtype)
    cdef floating[:, ::1] dy2 = dy2_arr
    cdef floating[:, ::1] dcols = dcols_arr
    cdef floating[:, :, ::1] dx = dx_arr
    cdef floating[:, ::1] w2 = np.asarray(w).reshape(c_out, c_in * k)

    cdef Py_ssize_t bi, ci, co, j, o, src, row
    cdef int bl = <int> (b * l_out), cik = <int> (c_in * k), n = <int> c_out
    with nogil:
        for co in range(c_out):
            for bi in range(b):
                for o in range(l_out):
                    dy2[co, bi * l_out + o] = dy[bi, co, o]
        # dcols (cik, b*l_out) = w2^T (cik, c_out) @ dy2 (c_out, b*l_out), row-major
        _gemm(&dy2[0, 0], &w2[0, 0], &dcols[0, 0], c'N', c'T', bl, cik, n, bl, cik, bl)
        for ci in range(c_in):
            for j in range(k):
                row = ci * k + j
                for bi in range(b):
                    for o in range(l_out):
                        src = o * stride + j - pad_l
                        if 0 <= src < l_in:
                            dx[bi, ci, src] += dcols[row, bi * l_out + o]
    return dx_arr


def conv1d_backward_w(floating[:, :, ::1] dy, floating[:, :, ::1] x,
                      int k, int stride, int pad_l, int pad_r):
    cdef Py_ssize_t b = dy.shape[0], c_out = dy.shape[1], l_out = dy.shape[2]
    cdef Py_ssize_t c_in = x.shape[1]
    dtype = np.float32 if floating is float else np.float64

    cols_arr = np.zeros((c_in * k, b * l_out), dtype=dtype)
    dy2_arr = np.empty((c_out, b * l_out), dtype=dtype)
    dw_arr = np.empty((c_out, c_in, k), dtype=dtype)
    cdef floating[:, ::1] cols = cols_arr
    cdef floating[:, ::1] dy2 = dy2_arr
    cdef floating[:, ::1] dw2 = np.asarray(dw_arr).reshape(c_out, c_in * k)

    cdef Py_ssize_t bi, co, o
    cdef int bl = <int> (b * l_out), cik = <int> (c_in * k), m = <int> c_out
    with nogil:
        _gather_cols(x, cols, k, stride, pad_l)
        for co in range(c_out):
            for bi in range(b):
                for o in range(l_out):
                    dy2[co, bi * l_out + o] = dy[bi, co, o]
        # dw2 (c_out, cik) = dy2 (c_out, b*l_out) @ cols^T (b*l_out, cik), row-major
        _gemm(&cols[0, 0], &dy2[0, 0], &dw2[0, 0], c'T', c'N', cik, m, bl, bl, bl, cik)
    return dw_arr
