# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled combination-key kernels.

Enumerates each record's t-way combinations as packed int64 keys and counts,
per record, how many keys are missing from a sorted source array. The numpy
fallback in ``_kernels_py`` implements the same contract.
"""

from libc.stdlib cimport free, malloc

from math import comb

import numpy as np


cdef inline bint _sorted_contains(const long long[::1] arr, long long key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo < arr.shape[0] and arr[lo] == key


def enumerate_keys(object assignments, object cell_base, int t, int width):
    """See ``_kernels_py.enumerate_keys``; identical contract."""
    cdef long long[:, ::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef long long[::1] base = np.ascontiguousarray(cell_base, dtype=np.int64)
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1]
    cdef Py_ssize_t m = comb(k, t)
    out_arr = np.empty((n, m), dtype=np.int64)
    if n == 0:
        return out_arr
    cdef long long[:, ::1] out = out_arr
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(t * sizeof(Py_ssize_t))
    if idx == NULL:
        raise MemoryError()
    cdef Py_ssize_t r, col, i, j
    cdef long long key
    try:
        with nogil:
            for r in range(n):
                for i in range(t):
                    idx[i] = i
                col = 0
                while True:
                    key = 0
                    for i in range(t):
                        key = (key << width) | (base[idx[i]] + a[r, idx[i]])
                    out[r, col] = key
                    col += 1
                    i = t - 1
                    while i >= 0 and idx[i] == k - t + i:
                        i -= 1
                    if i < 0:
                        break
                    idx[i] += 1
                    for j in range(i + 1, t):
                        idx[j] = idx[j - 1] + 1
    finally:
        free(idx)
    return out_arr


def missing_per_record(object assignments, object cell_base, int t, int width,
                       object source_keys):
    """See ``_kernels_py.missing_per_record``; identical contract."""
    cdef long long[:, ::1] a = np.ascontiguousarray(assignments, dtype=np.int64)
    cdef long long[::1] base = np.ascontiguousarray(cell_base, dtype=np.int64)
    cdef long long[::1] src = np.ascontiguousarray(source_keys, dtype=np.int64)
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1]
    out_arr = np.zeros(n, dtype=np.int64)
    if n == 0:
        return out_arr
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(t * sizeof(Py_ssize_t))
    if idx == NULL:
        raise MemoryError()
    cdef Py_ssize_t r, i, j
    cdef long long key, miss
    try:
        with nogil:
            for r in range(n):
                for i in range(t):
                    idx[i] = i
                miss = 0
                while True:
                    key = 0
                    for i in range(t):
                        key = (key << width) | (base[idx[i]] + a[r, idx[i]])
                    if not _sorted_contains(src, key):
                        miss += 1
                    i = t - 1
                    while i >= 0 and idx[i] == k - t + i:
                        i -= 1
                    if i < 0:
                        break
                    idx[i] += 1
                    for j in range(i + 1, t):
                        idx[j] = idx[j - 1] + 1
                out[r] = miss
    finally:
        free(idx)
    return out_arr
