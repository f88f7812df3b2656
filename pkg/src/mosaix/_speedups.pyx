# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for set-to-set matching.

Per query row, find the smallest squared Euclidean distance (float sets)
or the smallest differing-bit count (barcode sets) over all target rows.
Accumulation runs in index order so results are reproducible and
independent of thread count.
"""

from libc.math cimport INFINITY

import numpy as np

cimport numpy as cnp

cnp.import_array()


def min_sq_profile(const double[:, ::1] q, const double[:, ::1] t):
    """Per row of q: min over rows of t of the squared Euclidean distance."""
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, k
    cdef double best, acc, diff
    with nogil:
        for i in range(n):
            best = INFINITY
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = q[i, k] - t[j, k]
                    acc += diff * diff
                    if acc >= best:
                        break
                if acc < best:
                    best = acc
            ov[i] = best
    return out


def min_hamming_profile(const unsigned char[:, ::1] q, const unsigned char[:, ::1] t):
    """Per row of q: min over rows of t of the number of differing entries.

    Accumulates branch-free over 0/1 bytes in blocks so the compiler can
    vectorize, with an early exit between blocks once a row cannot beat
    the current minimum.
    """
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    cdef Py_ssize_t block = 128
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] ov = out
    cdef Py_ssize_t i, j, k, kk, kend
    cdef long long best, acc
    with nogil:
        for i in range(n):
            best = d + 1
            for j in range(m):
                acc = 0
                k = 0
                while k < d:
                    kend = k + block
                    if kend > d:
                        kend = d
                    for kk in range(k, kend):
                        acc += q[i, kk] ^ t[j, kk]
                    if acc >= best:
                        break
                    k = kend
                if acc < best:
                    best = acc
            ov[i] = best
    return out
