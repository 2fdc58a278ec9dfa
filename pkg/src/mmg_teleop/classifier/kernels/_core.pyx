# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled recurrent kernels.

Same contract as kernels/pure.py: gate order [i, f, g, o], zero initial
state, inputs pre-projected by the caller. Matrix products go through BLAS
(scipy's exported routines); gate nonlinearities are fused single-pass loops.
Supports float32 and float64 via fused types.
"""

import numpy as np

cimport cython
from libc.math cimport exp, expf, tanh, tanhf
from scipy.linalg.cython_blas cimport dgemm, sgemm

ctypedef fused floating:
    float
    double


cdef inline void _gemm_rowmajor_nn(floating* a, floating* b, floating* c,
                                   int m, int n, int k, floating beta) noexcept nogil:
    # Row-major C[m,n] (+)= A[m,k] @ B[k,n], expressed as column-major
    # C^T = B^T A^T for Fortran BLAS.
    cdef int lda = k, ldb = n, ldc = n
    cdef floating alpha = 1.0
    cdef char nt = b'N'
    if floating is double:
        dgemm(&nt, &nt, &n, &m, &k, <double*>&alpha, <double*>b, &ldb,
              <double*>a, &lda, <double*>&beta, <double*>c, &ldc)
    else:
        sgemm(&nt, &nt, &n, &m, &k, <float*>&alpha, <float*>b, &ldb,
              <float*>a, &lda, <float*>&beta, <float*>c, &ldc)


cdef inline void _gemm_rowmajor_nt(floating* a, floating* b, floating* c,
                                   int m, int n, int k, floating beta) noexcept nogil:
    # Row-major C[m,n] (+)= A[m,k] @ B[n,k]^T
    cdef int lda = k, ldb = k, ldc = n
    cdef floating alpha = 1.0
    cdef char nt = b'N', tt = b'T'
    if floating is double:
        dgemm(&tt, &nt, &n, &m, &k, <double*>&alpha, <double*>b, &ldb,
              <double*>a, &lda, <double*>&beta, <double*>c, &ldc)
    else:
        sgemm(&tt, &nt, &n, &m, &k, <float*>&alpha, <float*>b, &ldb,
              <float*>a, &lda, <float*>&beta, <float*>c, &ldc)


cdef inline void _gemm_rowmajor_tn(floating* a, floating* b, floating* c,
                                   int m, int n, int k, floating beta) noexcept nogil:
    # Row-major C[m,n] (+)= A[k,m]^T @ B[k,n]
    cdef int lda = m, ldb = n, ldc = n
    cdef floating alpha = 1.0
    cdef char nt = b'N', tt = b'T'
    if floating is double:
        dgemm(&nt, &tt, &n, &m, &k, <double*>&alpha, <double*>b, &ldb,
              <double*>a, &lda, <double*>&beta, <double*>c, &ldc)
    else:
        sgemm(&nt, &tt, &n, &m, &k, <float*>&alpha, <float*>b, &ldb,
              <float*>a, &lda, <float*>&beta, <float*>c, &ldc)


cdef inline floating _sig(floating x) noexcept nogil:
    # Clamped so exp never overflows (sigmoid saturates past +-30 at float
    # precision anyway); keeps the fast-math build well-defined.
    if x > 30.0:
        x = 30.0
    elif x < -30.0:
        x = -30.0
    if floating is double:
        return 1.0 / (1.0 + exp(-x))
    else:
        return <float>(1.0) / (<float>(1.0) + expf(-x))


cdef inline floating _tanh(floating x) noexcept nogil:
    if x > 20.0:
        x = 20.0
    elif x < -20.0:
        x = -20.0
    if floating is double:
        return tanh(x)
    else:
        return tanhf(x)


def lstm_seq_forward(floating[:, :, ::1] xp, floating[:, ::1] w_hh):
    """(T, B, 4H) projections + (H, 4H) recurrent weights -> hs, gates, cs."""
    cdef Py_ssize_t T = xp.shape[0], B = xp.shape[1], H4 = xp.shape[2]
    cdef Py_ssize_t H = H4 // 4
    dtype = np.float64 if floating is double else np.float32
    hs_np = np.empty((T, B, H), dtype=dtype)
    gates_np = np.empty((T, B, H4), dtype=dtype)
    cs_np = np.empty((T, B, H), dtype=dtype)
    cdef floating[:, :, ::1] hs = hs_np
    cdef floating[:, :, ::1] gates = gates_np
    cdef floating[:, :, ::1] cs = cs_np
    h_np = np.zeros((B, H), dtype=dtype)
    c_np = np.zeros((B, H), dtype=dtype)
    cdef floating[:, ::1] h = h_np
    cdef floating[:, ::1] c = c_np
    cdef Py_ssize_t t, b, j
    cdef floating cv
    with nogil:
        for t in range(T):
            # gates[t] = xp[t]; gates[t] += h @ w_hh
            for b in range(B):
                for j in range(H4):
                    gates[t, b, j] = xp[t, b, j]
            _gemm_rowmajor_nn(&h[0, 0], &w_hh[0, 0], &gates[t, 0, 0],
                              <int>B, <int>H4, <int>H, <floating>1.0)
            # Unit-stride activation passes (vectorizable), then the state
            # update. Gate row layout per sample: [i | f | g | o].
            for b in range(B):
                for j in range(H):
                    gates[t, b, j] = _sig(gates[t, b, j])
                for j in range(H):
                    gates[t, b, H + j] = _sig(gates[t, b, H + j])
                for j in range(H):
                    gates[t, b, 2 * H + j] = _tanh(gates[t, b, 2 * H + j])
                for j in range(H):
                    gates[t, b, 3 * H + j] = _sig(gates[t, b, 3 * H + j])
                for j in range(H):
                    cv = gates[t, b, H + j] * c[b, j] + gates[t, b, j] * gates[t, b, 2 * H + j]
                    c[b, j] = cv
                    cs[t, b, j] = cv
                    h[b, j] = gates[t, b, 3 * H + j] * _tanh(cv)
                    hs[t, b, j] = h[b, j]
    return hs_np, gates_np, cs_np


def lstm_seq_backward(floating[:, ::1] w_hh,
                      floating[:, :, ::1] gates,
                      floating[:, :, ::1] cs,
                      floating[:, :, ::1] hs,
                      floating[:, :, ::1] dhs):
    """Gradients wrt pre-activation gates and recurrent weights."""
    cdef Py_ssize_t T = dhs.shape[0], B = dhs.shape[1], H = dhs.shape[2]
    cdef Py_ssize_t H4 = 4 * H
    dtype = np.float64 if floating is double else np.float32
    da_np = np.empty((T, B, H4), dtype=dtype)
    dw_np = np.zeros((H, H4), dtype=dtype)
    cdef floating[:, :, ::1] da = da_np
    cdef floating[:, ::1] dw_hh = dw_np
    dh_np = np.zeros((B, H), dtype=dtype)
    dc_np = np.zeros((B, H), dtype=dtype)
    cdef floating[:, ::1] dh = dh_np
    cdef floating[:, ::1] dc = dc_np
    cdef Py_ssize_t t, b, j
    cdef floating iv, fv, gv, tc, dhv, dcv, dfv, ov
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                # two unit-stride passes: accumulate dc and the output-gate
                # slot first (needs tanh of the cell), then the remaining
                # gate slots from the finished dc value.
                for j in range(H):
                    tc = _tanh(cs[t, b, j])
                    dhv = dh[b, j] + dhs[t, b, j]
                    ov = gates[t, b, 3 * H + j]
                    dc[b, j] = dc[b, j] + dhv * ov * (<floating>1.0 - tc * tc)
                    da[t, b, 3 * H + j] = (dhv * tc) * ov * (<floating>1.0 - ov)
                for j in range(H):
                    dcv = dc[b, j]
                    iv = gates[t, b, j]
                    fv = gates[t, b, H + j]
                    gv = gates[t, b, 2 * H + j]
                    if t > 0:
                        dfv = dcv * cs[t - 1, b, j]
                    else:
                        dfv = <floating>0.0
                    da[t, b, j] = (dcv * gv) * iv * (<floating>1.0 - iv)
                    da[t, b, H + j] = dfv * fv * (<floating>1.0 - fv)
                    da[t, b, 2 * H + j] = (dcv * iv) * (<floating>1.0 - gv * gv)
                    dc[b, j] = dcv * fv
            if t > 0:
                # dw_hh += hs[t-1]^T @ da[t]; dh = da[t] @ w_hh^T
                _gemm_rowmajor_tn(&hs[t - 1, 0, 0], &da[t, 0, 0], &dw_hh[0, 0],
                                  <int>H, <int>H4, <int>B, <floating>1.0)
                _gemm_rowmajor_nt(&da[t, 0, 0], &w_hh[0, 0], &dh[0, 0],
                                  <int>B, <int>H, <int>H4, <floating>0.0)
    return da_np, dw_np
