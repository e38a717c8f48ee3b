# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the sliding-window kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def unfold(const double[:, :, ::1] xp, Py_ssize_t k, Py_ssize_t s, Py_ssize_t lout):
    cdef Py_ssize_t n = xp.shape[0], c = xp.shape[2]
    out = np.empty((n, lout, k, c))
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t b, j, t, ch, base
    for b in range(n):
        for j in range(lout):
            base = j * s
            for t in range(k):
                for ch in range(c):
                    o[b, j, t, ch] = xp[b, base + t, ch]
    return out


def fold(const double[:, :, :, ::1] cols, Py_ssize_t s, Py_ssize_t lp):
    cdef Py_ssize_t n = cols.shape[0], lout = cols.shape[1]
    cdef Py_ssize_t k = cols.shape[2], c = cols.shape[3]
    out = np.zeros((n, lp, c))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t b, j, t, ch, base
    for b in range(n):
        for j in range(lout):
            base = j * s
            for t in range(k):
                for ch in range(c):
                    o[b, base + t, ch] += cols[b, j, t, ch]
    return out


def maxpool_forward(const double[:, :, ::1] xp, Py_ssize_t p, Py_ssize_t s, Py_ssize_t lout):
    cdef Py_ssize_t n = xp.shape[0], c = xp.shape[2]
    out = np.empty((n, lout, c))
    arg = np.empty((n, lout, c), dtype=np.int64)
    cdef double[:, :, ::1] o = out
    cdef cnp.int64_t[:, :, ::1] a = arg
    cdef Py_ssize_t b, j, t, ch, base, best_i
    cdef double best, v
    for b in range(n):
        for j in range(lout):
            base = j * s
            for ch in range(c):
                best = xp[b, base, ch]
                best_i = base
                for t in range(1, p):
                    v = xp[b, base + t, ch]
                    if v > best:
                        best = v
                        best_i = base + t
                o[b, j, ch] = best
                a[b, j, ch] = best_i
    return out, arg


def maxpool_backward(const double[:, :, ::1] g, const cnp.int64_t[:, :, ::1] arg, Py_ssize_t lp, Py_ssize_t s):
    cdef Py_ssize_t n = g.shape[0], lout = g.shape[1], c = g.shape[2]
    out = np.zeros((n, lp, c))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t b, j, ch
    for b in range(n):
        for j in range(lout):
            for ch in range(c):
                o[b, arg[b, j, ch], ch] += g[b, j, ch]
    return out
