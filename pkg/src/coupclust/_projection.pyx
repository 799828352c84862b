# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simplex-projection kernel.

Mirrors the numpy implementation in coupclust.simplex operation for
operation (descending sort, sequential prefix sum, the multiplication-form
threshold test) so the two backends return bitwise-identical results.
"""

from libc.stdlib cimport free, malloc, qsort

import numpy as np


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double da = (<const double*> a)[0]
    cdef double db = (<const double*> b)[0]
    if da < db:
        return 1
    if da > db:
        return -1
    return 0


cdef void _sort_desc(double* a, Py_ssize_t n) noexcept nogil:
    # Insertion sort beats qsort's comparator-call overhead for the short
    # columns this kernel sees (column height = cluster count).
    cdef Py_ssize_t i, j
    cdef double key
    if n > 64:
        qsort(a, n, sizeof(double), _cmp_desc)
        return
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] < key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


cdef void _project(const double* v, double* out, double* scratch,
                   Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, rho = 0
    cdef double css = 0.0
    cdef double css_rho = 0.0
    cdef double tau, shifted
    for i in range(n):
        scratch[i] = v[i]
    _sort_desc(scratch, n)
    for i in range(n):
        css += scratch[i]
        if scratch[i] * (i + 1) > css - 1.0:
            rho = i
            css_rho = css
    tau = (css_rho - 1.0) / (rho + 1)
    for i in range(n):
        shifted = v[i] - tau
        out[i] = shifted if shifted > 0.0 else 0.0


def project_vector(double[::1] v):
    cdef Py_ssize_t n = v.shape[0]
    if n == 0:
        raise ValueError("expected a nonempty vector")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        _project(&v[0], &ov[0], scratch, n)
    finally:
        free(scratch)
    return out


def project_columns(double[:, ::1] mat):
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t m = mat.shape[1]
    if n == 0:
        raise ValueError("expected a matrix with at least one row")
    # Work on the transpose so every column sits contiguous in memory;
    # the two blocked transposes cost far less than m strided gathers.
    tmat = np.ascontiguousarray(np.asarray(mat).T)
    tout = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] tv = tmat
    cdef double[:, ::1] tov = tout
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t j
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(m):
                _project(&tv[j, 0], &tov[j, 0], scratch, n)
    finally:
        free(scratch)
    return np.ascontiguousarray(tout.T)
