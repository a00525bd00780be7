# cython: boundscheck=False, wraparound=False
"""Compiled kernels for the quadratic inner loops of the metric suite."""

import numpy as np


def lcs_length_ids(const int[:] a, const int[:] b):
    """Length of the longest common subsequence of two integer id sequences."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev_arr = np.zeros(m + 1, dtype=np.intc)
    curr_arr = np.zeros(m + 1, dtype=np.intc)
    cdef int[:] prev = prev_arr
    cdef int[:] curr = curr_arr
    cdef int[:] tmp
    cdef Py_ssize_t i, j
    cdef int ai, up, left
    for i in range(n):
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                curr[j + 1] = prev[j] + 1
            else:
                up = prev[j + 1]
                left = curr[j]
                curr[j + 1] = up if up >= left else left
        tmp = prev
        prev = curr
        curr = tmp
    return int(prev[m])
