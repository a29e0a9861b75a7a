# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport calloc, free
from libc.string cimport memset

cnp.import_array()

cdef double TIE = 1e-12


cdef inline int _popcount(uint64_t x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef bint _shattered(const uint64_t[::1] masks, uint64_t sub, int k,
                     int* pos, unsigned char* seen) nogil:
    cdef Py_ssize_t s, nsets = masks.shape[0]
    cdef uint64_t m, target = (<uint64_t>1) << k
    cdef uint64_t idx, count = 0
    cdef int b, j = 0
    for b in range(64):
        if (sub >> b) & 1:
            pos[j] = b
            j += 1
    memset(seen, 0, target)
    for s in range(nsets):
        m = masks[s]
        idx = 0
        for b in range(k):
            idx |= ((m >> pos[b]) & 1) << b
        if not seen[idx]:
            seen[idx] = 1
            count += 1
            if count == target:
                return True
    return False


def max_shattered(masks, int n_points, int k_max):
    cdef const uint64_t[::1] mv = np.unique(np.asarray(masks, dtype=np.uint64))
    cdef int best = 0, k
    cdef uint64_t sub, low, ripple, limit
    cdef bint found
    cdef int pos[64]
    cdef unsigned char* seen
    if k_max > n_points:
        k_max = n_points
    if k_max <= 0:
        return 0
    seen = <unsigned char*>calloc((<size_t>1) << k_max, 1)
    if seen == NULL:
        raise MemoryError()
    try:
        limit = (<uint64_t>1) << n_points
        for k in range(1, k_max + 1):
            found = False
            sub = ((<uint64_t>1) << k) - 1
            with nogil:
                while sub < limit:
                    if _shattered(mv, sub, k, pos, seen):
                        found = True
                        break
                    low = sub & (~sub + 1)
                    ripple = sub + low
                    sub = (((ripple ^ sub) >> 2) // low) | ripple
            if not found:
                break
            best = k
    finally:
        free(seen)
    return best


cdef void _pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col) nogil:
    cdef Py_ssize_t i, j, nr = T.shape[0], nc = T.shape[1]
    cdef double p = T[row, col], f
    for j in range(nc):
        T[row, j] /= p
    for i in range(nr):
        if i == row:
            continue
        f = T[i, col]
        if f != 0.0:
            for j in range(nc):
                T[i, j] -= f * T[row, j]
        T[i, col] = 0.0
    T[row, col] = 1.0


def pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col):
    _pivot(T, row, col)


def simplex_iterate(double[:, ::1] T, int64_t[::1] basis, Py_ssize_t n_cols,
                    Py_ssize_t max_iter, double tol):
    cdef Py_ssize_t m = T.shape[0] - 1, rhs = T.shape[1] - 1
    cdef Py_ssize_t i, j, col, leave, it = 0
    cdef int status
    cdef double a, ratio, best
    with nogil:
        while True:
            col = -1
            for j in range(n_cols):
                if T[m, j] < -tol:
                    col = j
                    break
            if col < 0:
                status = 0
                break
            leave = -1
            best = 0.0
            for i in range(m):
                a = T[i, col]
                if a > tol:
                    ratio = T[i, rhs] / a
                    if leave < 0 or ratio < best - TIE:
                        leave = i
                        best = ratio
                    elif ratio <= best + TIE and basis[i] < basis[leave]:
                        leave = i
                        best = ratio
            if leave < 0:
                status = 1
                break
            if it >= max_iter:
                status = 2
                col = -1
                break
            _pivot(T, leave, col)
            basis[leave] = col
            it += 1
    return status, it, (col if status == 1 else -1)


def adjacent_pairs(zero_masks, plus, minus, int min_common):
    cdef const uint64_t[::1] Z = np.ascontiguousarray(zero_masks, dtype=np.uint64)
    cdef const int64_t[::1] P = np.ascontiguousarray(plus, dtype=np.int64)
    cdef const int64_t[::1] M = np.ascontiguousarray(minus, dtype=np.int64)
    cdef Py_ssize_t a, b, r, nr = Z.shape[0]
    cdef int64_t p, n
    cdef uint64_t z
    cdef bint adjacent
    out = []
    for a in range(P.shape[0]):
        p = P[a]
        for b in range(M.shape[0]):
            n = M[b]
            z = Z[p] & Z[n]
            if _popcount(z) < min_common:
                continue
            adjacent = True
            for r in range(nr):
                if r != p and r != n and (z & ~Z[r]) == 0:
                    adjacent = False
                    break
            if adjacent:
                out.append((p, n))
    return np.array(out, dtype=np.int64).reshape(-1, 2)
