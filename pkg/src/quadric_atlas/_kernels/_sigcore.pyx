# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batched spectral kernels.

One LAPACK dsyev('N') call per matrix with preallocated workspace and fused
direction-form assembly.  This avoids the per-matrix gufunc overhead that
dominates numpy's batched eigvalsh at the small sizes (n <= ~60) this
package works at.  The batch loops run without the GIL so Python-level
thread pools can overlap calls.
"""

from libc.math cimport fabs
from libc.stdlib cimport free, malloc

from scipy.linalg.cython_lapack cimport dsyev

import numpy as np


cdef inline void _mix(const double* basis, const double* c,
                      Py_ssize_t k, Py_ssize_t nn, double* out) noexcept nogil:
    cdef Py_ssize_t j, t
    for t in range(nn):
        out[t] = 0.0
    for j in range(k):
        for t in range(nn):
            out[t] += c[j] * basis[j * nn + t]


cdef inline int _eigvals(double* a, double* w, double* work,
                         int n, int lwork) noexcept nogil:
    # a is overwritten; symmetric input makes row/column order irrelevant
    cdef int info = 0
    dsyev('N', 'L', &n, a, &n, w, work, &lwork, &info)
    return info


cdef int _query_lwork(int n) except -1:
    cdef int info = 0, lwork = -1
    cdef double wkopt = 0.0
    cdef double dummy_a = 0.0, dummy_w = 0.0
    dsyev('N', 'L', &n, &dummy_a, &n, &dummy_w, &wkopt, &lwork, &info)
    if info != 0:
        raise RuntimeError(f"dsyev workspace query failed (info={info})")
    return <int>wkopt


def batch_inertia(const double[:, :, ::1] mats, double zero_tol):
    """Inertia counts (n_plus, n_zero, n_minus) for a (B, n, n) stack."""
    cdef Py_ssize_t B = mats.shape[0], n = mats.shape[1]
    if mats.shape[2] != n:
        raise ValueError("matrices must be square")
    out_arr = np.empty((B, 3), dtype=np.int64)
    if B == 0:
        return out_arr
    cdef long long[:, ::1] out = out_arr
    cdef int ni = <int>n, lwork = _query_lwork(ni)
    cdef double* a = <double*>malloc(n * n * sizeof(double))
    cdef double* w = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(lwork * sizeof(double))
    if a == NULL or w == NULL or work == NULL:
        free(a); free(w); free(work)
        raise MemoryError()
    cdef Py_ssize_t b, t, i
    cdef int info = 0
    cdef double scale, thr
    cdef long long plus, minus
    cdef const double* src
    try:
        with nogil:
            for b in range(B):
                src = &mats[b, 0, 0]
                for t in range(n * n):
                    a[t] = src[t]
                info = _eigvals(a, w, work, ni, lwork)
                if info != 0:
                    break
                scale = 0.0
                for i in range(n):
                    if fabs(w[i]) > scale:
                        scale = fabs(w[i])
                if scale == 0.0:
                    scale = 1.0
                thr = zero_tol * scale
                plus = 0; minus = 0
                for i in range(n):
                    if w[i] > thr:
                        plus += 1
                    elif w[i] < -thr:
                        minus += 1
                out[b, 0] = plus
                out[b, 1] = n - plus - minus
                out[b, 2] = minus
    finally:
        free(a); free(w); free(work)
    if info != 0:
        raise RuntimeError(f"dsyev failed to converge (info={info})")
    return out_arr


def batch_inertia_mix(const double[:, :, ::1] basis, const double[:, ::1] coeffs,
                      double zero_tol):
    """Inertia counts of sum_j coeffs[b, j] * basis[j] for each row b."""
    cdef Py_ssize_t k = basis.shape[0], n = basis.shape[1], B = coeffs.shape[0]
    if basis.shape[2] != n:
        raise ValueError("basis matrices must be square")
    if coeffs.shape[1] != k:
        raise ValueError("coefficient width must match basis count")
    out_arr = np.empty((B, 3), dtype=np.int64)
    if B == 0:
        return out_arr
    cdef long long[:, ::1] out = out_arr
    cdef int ni = <int>n, lwork = _query_lwork(ni)
    cdef double* a = <double*>malloc(n * n * sizeof(double))
    cdef double* w = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(lwork * sizeof(double))
    if a == NULL or w == NULL or work == NULL:
        free(a); free(w); free(work)
        raise MemoryError()
    cdef Py_ssize_t b, i
    cdef int info = 0
    cdef double scale, thr
    cdef long long plus, minus
    try:
        with nogil:
            for b in range(B):
                _mix(&basis[0, 0, 0], &coeffs[b, 0], k, n * n, a)
                info = _eigvals(a, w, work, ni, lwork)
                if info != 0:
                    break
                scale = 0.0
                for i in range(n):
                    if fabs(w[i]) > scale:
                        scale = fabs(w[i])
                if scale == 0.0:
                    scale = 1.0
                thr = zero_tol * scale
                plus = 0; minus = 0
                for i in range(n):
                    if w[i] > thr:
                        plus += 1
                    elif w[i] < -thr:
                        minus += 1
                out[b, 0] = plus
                out[b, 1] = n - plus - minus
                out[b, 2] = minus
    finally:
        free(a); free(w); free(work)
    if info != 0:
        raise RuntimeError(f"dsyev failed to converge (info={info})")
    return out_arr


def batch_margin_mix(const double[:, :, ::1] basis, const double[:, ::1] coeffs, int m):
    """Raw level-m margins min(lam_plus_m, -lam_minus_m) per coefficient row."""
    cdef Py_ssize_t k = basis.shape[0], n = basis.shape[1], B = coeffs.shape[0]
    if basis.shape[2] != n:
        raise ValueError("basis matrices must be square")
    if coeffs.shape[1] != k:
        raise ValueError("coefficient width must match basis count")
    if not 1 <= m <= n:
        raise ValueError(f"level m={m} out of range for n={n}")
    out_arr = np.empty(B, dtype=np.float64)
    if B == 0:
        return out_arr
    cdef double[::1] out = out_arr
    cdef int ni = <int>n, lwork = _query_lwork(ni)
    cdef double* a = <double*>malloc(n * n * sizeof(double))
    cdef double* w = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(lwork * sizeof(double))
    if a == NULL or w == NULL or work == NULL:
        free(a); free(w); free(work)
        raise MemoryError()
    cdef Py_ssize_t b
    cdef int info = 0
    cdef double hi, lo
    try:
        with nogil:
            for b in range(B):
                _mix(&basis[0, 0, 0], &coeffs[b, 0], k, n * n, a)
                info = _eigvals(a, w, work, ni, lwork)
                if info != 0:
                    break
                hi = w[n - m]      # m-th largest (ascending order)
                lo = w[m - 1]      # m-th smallest
                out[b] = hi if hi < -lo else -lo
    finally:
        free(a); free(w); free(work)
    if info != 0:
        raise RuntimeError(f"dsyev failed to converge (info={info})")
    return out_arr
