# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Goertzel bank."""

import numpy as np
from libc.math cimport cos, M_PI


def goertzel_frames(const double[::1] x, const long long[::1] starts,
                    Py_ssize_t length, const double[::1] freqs, double fs,
                    const double[::1] window=None):
    cdef Py_ssize_t n_s = starts.shape[0]
    cdef Py_ssize_t n_f = freqs.shape[0]
    cdef Py_ssize_t n_x = x.shape[0]
    cdef Py_ssize_t i, j, k, s0, lo, hi
    cdef double c, q, q1, q2, v
    cdef bint use_w = window is not None
    out = np.zeros((n_s, n_f), dtype=np.float64)
    cdef double[:, ::1] o = out
    coef_arr = np.empty(n_f, dtype=np.float64)
    cdef double[::1] coef = coef_arr
    for j in range(n_f):
        coef[j] = 2.0 * cos(2.0 * M_PI * freqs[j] / fs)
    with nogil:
        for i in range(n_s):
            s0 = starts[i]
            # samples outside the buffer are zeros; leading zeros leave the state at 0
            lo = 0 if s0 >= 0 else -s0
            hi = length if s0 + length <= n_x else n_x - s0
            for j in range(n_f):
                c = coef[j]
                q1 = 0.0
                q2 = 0.0
                for k in range(lo, hi):
                    v = x[s0 + k]
                    if use_w:
                        v = v * window[k]
                    q = v + c * q1 - q2
                    q2 = q1
                    q1 = q
                # trailing zeros still advance the recurrence
                for k in range(hi if hi > lo else lo, length):
                    q = c * q1 - q2
                    q2 = q1
                    q1 = q
                o[i, j] = q1 * q1 + q2 * q2 - c * q1 * q2
    return out
