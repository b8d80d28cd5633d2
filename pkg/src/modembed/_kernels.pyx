# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-timestep hot kernels.

Twin of ``modembed._kernels_py`` (see that module for the contracts);
straight C loops instead of vectorized numpy.  Correlation sums run
sequentially over the window, matching the brute-force definition.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, copysign, fabs, sqrt

cnp.import_array()

ENERGY_FLOOR = 1e-12

cdef double _ENERGY_FLOOR = 1e-12


def lag_diff_matrix(double[::1] i, double[::1] q, int lag_count):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t rows = n - lag_count
    out_arr = np.empty((rows, 2 * lag_count))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, t
    cdef int lag
    for r in range(rows):
        t = r + lag_count
        for lag in range(1, lag_count + 1):
            out[r, lag - 1] = i[t] - i[t - lag]
            out[r, lag_count + lag - 1] = q[t] - q[t - lag]
    return out_arr


def windowed_corr_matrix(double[::1] i, double[::1] q, int lag_count, int window):
    cdef Py_ssize_t n = i.shape[0]
    cdef Py_ssize_t t0 = window - 1 + lag_count
    cdef Py_ssize_t rows = n - t0
    out_arr = np.empty((rows, 2 * lag_count))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] c
    cdef Py_ssize_t r, t, s
    cdef int ch, lag
    cdef double num, e_cur, e_lag, val
    for ch in range(2):
        c = i if ch == 0 else q
        for r in range(rows):
            t = r + t0
            for lag in range(1, lag_count + 1):
                num = 0.0
                e_cur = 0.0
                e_lag = 0.0
                for s in range(t - window + 1, t + 1):
                    num += c[s] * c[s - lag]
                    e_cur += c[s] * c[s]
                    e_lag += c[s - lag] * c[s - lag]
                if e_cur < _ENERGY_FLOOR or e_lag < _ENERGY_FLOOR:
                    val = 0.0
                else:
                    val = num / sqrt(e_cur * e_lag)
                    if val > 1.0:
                        val = 1.0
                    elif val < -1.0:
                        val = -1.0
                out[r, ch * lag_count + lag - 1] = val
    return out_arr


cdef inline Py_ssize_t _bin_index(double v, Py_ssize_t size, double scale) nogil:
    cdef Py_ssize_t half = size // 2
    cdef Py_ssize_t below = <Py_ssize_t>ceil(fabs(v) * scale) - 1
    if below > half - 1:
        below = half - 1
    if copysign(1.0, v) < 0.0:
        return half - 1 - below
    return half + below


def bin_index_array(double[::1] values, int size, double value_range):
    cdef Py_ssize_t n = values.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef double scale = size / (2.0 * value_range)
    cdef Py_ssize_t k
    for k in range(n):
        out[k] = _bin_index(values[k], size, scale)
    return out_arr


def hist2d_counts(double[::1] x, double[::1] y, int size, double value_range):
    cdef Py_ssize_t n = x.shape[0]
    counts_arr = np.zeros((size, size))
    cdef double[:, ::1] counts = counts_arr
    cdef double scale = size / (2.0 * value_range)
    cdef Py_ssize_t k
    for k in range(n):
        counts[_bin_index(x[k], size, scale), _bin_index(y[k], size, scale)] += 1.0
    return counts_arr
