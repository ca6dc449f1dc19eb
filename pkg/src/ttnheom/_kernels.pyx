# cython: boundscheck=False, wraparound=False, cdivision=True
"""BLAS-backed contraction kernels for complex order-2..4 tensors."""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

ctypedef double complex zcomplex

cdef zcomplex Z_ONE = 1.0 + 0.0j
cdef zcomplex Z_ZERO = 0.0 + 0.0j


cdef void _gemm_rowmajor(char ta, char tb, int m, int n, int k,
                         zcomplex* a, int lda, zcomplex* b, int ldb,
                         zcomplex* c, int ldc, zcomplex beta) noexcept nogil:
    # Row-major C = op(A) @ op(B) via column-major zgemm on swapped operands.
    zgemm(&tb, &ta, &n, &m, &k, &Z_ONE, b, &ldb, a, &lda, &beta, c, &ldc)


def mode_apply(cnp.ndarray[zcomplex, ndim=2] mat, object ten, int axis):
    """out[..., p, ...] = sum_q mat[p, q] ten[..., q, ...] along ``axis``."""
    cdef cnp.ndarray tarr = <cnp.ndarray> ten
    cdef int nd = tarr.ndim
    if axis < 0:
        axis += nd
    cdef int p = mat.shape[0]
    cdef int q = mat.shape[1]
    if tarr.shape[axis] != q:
        raise ValueError("mode_apply dimension mismatch")

    cdef cnp.npy_intp i
    cdef long lead = 1, trail = 1
    for i in range(axis):
        lead *= tarr.shape[i]
    for i in range(axis + 1, nd):
        trail *= tarr.shape[i]

    out_shape = list((<object> tarr).shape)
    out_shape[axis] = p
    cdef cnp.ndarray out = np.empty(out_shape, dtype=np.complex128)

    cdef zcomplex* tp = <zcomplex*> cnp.PyArray_DATA(tarr)
    cdef zcomplex* mp = <zcomplex*> cnp.PyArray_DATA(mat)
    cdef zcomplex* op = <zcomplex*> cnp.PyArray_DATA(out)
    cdef long l
    with nogil:
        if trail == 1:
            # out (lead, p) = ten (lead, q) @ mat^T
            _gemm_rowmajor(b'N', b'T', <int> lead, p, q, tp, q, mp, q, op, p, Z_ZERO)
        elif lead == 1:
            # out (p, trail) = mat @ ten (q, trail)
            _gemm_rowmajor(b'N', b'N', p, <int> trail, q, mp, q, tp, <int> trail,
                           op, <int> trail, Z_ZERO)
        else:
            for l in range(lead):
                _gemm_rowmajor(b'N', b'N', p, <int> trail, q, mp, q,
                               tp + l * q * trail, <int> trail,
                               op + l * p * trail, <int> trail, Z_ZERO)
    return out


def gram(object bra, object ket, int axis):
    """g[a', a] = sum_rest conj(bra)[.., a', ..] ket[.., a, ..]."""
    cdef cnp.ndarray barr = <cnp.ndarray> bra
    cdef cnp.ndarray karr = <cnp.ndarray> ket
    cdef int nd = barr.ndim
    if axis < 0:
        axis += nd
    cdef cnp.npy_intp i
    for i in range(nd):
        if i != axis and barr.shape[i] != karr.shape[i]:
            raise ValueError("gram dimension mismatch")

    cdef int rb = <int> barr.shape[axis]
    cdef int rk = <int> karr.shape[axis]
    cdef long lead = 1, trail = 1
    for i in range(axis):
        lead *= barr.shape[i]
    for i in range(axis + 1, nd):
        trail *= barr.shape[i]

    cdef cnp.ndarray out = np.zeros((rb, rk), dtype=np.complex128)
    cdef cnp.ndarray bc = np.ascontiguousarray(np.conj(barr))
    cdef zcomplex* bp = <zcomplex*> cnp.PyArray_DATA(bc)
    cdef zcomplex* kp = <zcomplex*> cnp.PyArray_DATA(karr)
    cdef zcomplex* op = <zcomplex*> cnp.PyArray_DATA(out)
    cdef long l
    with nogil:
        if lead == 1:
            # out = bra_c (rb, trail) @ ket^T (trail, rk)
            _gemm_rowmajor(b'N', b'T', rb, rk, <int> trail, bp, <int> trail,
                           kp, <int> trail, op, rk, Z_ZERO)
        else:
            for l in range(lead):
                _gemm_rowmajor(b'N', b'T', rb, rk, <int> trail,
                               bp + l * rb * trail, <int> trail,
                               kp + l * rk * trail, <int> trail, op, rk, Z_ONE)
    return out
