# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled brute-force neighbor kernels.

Both functions mirror ``bi3._fallback`` exactly: squared distances are
accumulated column by column in the same order, so results are bitwise
identical between the two backends.
"""
import numpy as np

from libc.math cimport INFINITY


cdef inline double _sqdist(const double* q, const double* x,
                           const unsigned char* nominal, bint any_nominal,
                           Py_ssize_t d, double bound) noexcept nogil:
    # stops early once the partial sum reaches ``bound`` (checked every fourth
    # column); partial sums never decrease, so such a row could not be selected
    cdef double s = 0.0
    cdef double diff
    cdef Py_ssize_t c
    if any_nominal:
        for c in range(d):
            if nominal[c]:
                diff = 1.0 if q[c] != x[c] else 0.0
            else:
                diff = q[c] - x[c]
            s = s + diff * diff
            if (c & 3) == 3 and s >= bound:
                return s
    elif d <= 4:
        for c in range(d):
            diff = q[c] - x[c]
            s = s + diff * diff
    else:
        for c in range(d):
            diff = q[c] - x[c]
            s = s + diff * diff
            if (c & 3) == 3 and s >= bound:
                return s
    return s


cdef bint _has_nominal(const unsigned char[::1] nominal) noexcept nogil:
    cdef Py_ssize_t c
    for c in range(nominal.shape[0]):
        if nominal[c]:
            return True
    return False


def knn_select(const double[:, ::1] Q, const double[:, ::1] X,
               const unsigned char[::1] nominal, Py_ssize_t k,
               const long long[::1] exclude):
    """k nearest rows of ``X`` for every row of ``Q``, ordered by (distance, index)."""
    cdef Py_ssize_t nq = Q.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t qi, j, pos, filled
    cdef double s, bound
    cdef bint any_nominal = _has_nominal(nominal)

    idx = np.empty((nq, k), dtype=np.int64)
    dist = np.empty((nq, k), dtype=np.float64)
    cdef long long[:, ::1] I = idx
    cdef double[:, ::1] D = dist

    with nogil:
        for qi in range(nq):
            filled = 0
            for j in range(n):
                if j == exclude[qi]:
                    continue
                bound = D[qi, k - 1] if filled == k else INFINITY
                s = _sqdist(&Q[qi, 0], &X[j, 0], &nominal[0], any_nominal, d, bound)
                if filled < k:
                    pos = filled
                    filled = filled + 1
                elif s < D[qi, k - 1]:
                    pos = k - 1
                else:
                    continue
                # strict comparison keeps the earlier index ahead on ties
                while pos > 0 and D[qi, pos - 1] > s:
                    D[qi, pos] = D[qi, pos - 1]
                    I[qi, pos] = I[qi, pos - 1]
                    pos = pos - 1
                D[qi, pos] = s
                I[qi, pos] = j
    return idx, dist


def first_positive_rank(const double[:, ::1] Q, const double[:, ::1] X,
                        const unsigned char[::1] nominal,
                        const unsigned char[::1] positive,
                        const long long[::1] exclude):
    """1-based rank of the nearest positive row of ``X`` (0 when none exists)."""
    cdef Py_ssize_t nq = Q.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t qi, j, best_j, count
    cdef double best, s
    cdef bint any_nominal = _has_nominal(nominal)

    rank = np.zeros(nq, dtype=np.int64)
    buf = np.empty(n, dtype=np.float64)
    cdef long long[::1] R = rank
    cdef double[::1] B = buf

    with nogil:
        for qi in range(nq):
            best = INFINITY
            best_j = -1
            for j in range(n):
                if j == exclude[qi]:
                    B[j] = INFINITY
                    continue
                s = _sqdist(&Q[qi, 0], &X[j, 0], &nominal[0], any_nominal, d, INFINITY)
                B[j] = s
                if positive[j] and s < best:
                    best = s
                    best_j = j
            if best_j < 0:
                R[qi] = 0
                continue
            count = 0
            for j in range(n):
                if j == exclude[qi]:
                    continue
                if B[j] < best or (B[j] == best and j < best_j):
                    count = count + 1
            R[qi] = count + 1
    return rank
