# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row scans over symbol-id matrices."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def match_rows(const int[:, ::1] M, const long long[::1] cols, const int[::1] target):
    """mask[i] = all(M[i, cols[j]] == target[j])."""
    cdef Py_ssize_t n = M.shape[0], m = cols.shape[0], i, j
    out = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    for i in range(n):
        for j in range(m):
            if M[i, cols[j]] != target[j]:
                o[i] = 0
                break
    return out.view(np.bool_)


def match_pairs(const int[:, ::1] M, const long long[::1] a, const long long[::1] b):
    """mask[i] = all(M[i, a[j]] == M[i, b[j]])."""
    cdef Py_ssize_t n = M.shape[0], m = a.shape[0], i, j
    out = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    for i in range(n):
        for j in range(m):
            if M[i, a[j]] != M[i, b[j]]:
                o[i] = 0
                break
    return out.view(np.bool_)

