# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the bootstrap-assembly and annuity kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, NAN

cnp.import_array()


cdef void _close_row(double* row, Py_ssize_t n, double radix) noexcept nogil:
    cdef Py_ssize_t u
    cdef double m = row[0], s = 0.0
    for u in range(1, n):
        if row[u] > m:
            m = row[u]
    for u in range(n):
        row[u] = exp(row[u] - m)
        s += row[u]
    s = radix / s
    for u in range(n):
        row[u] *= s


def close_log_rows(const double[:, ::1] logd, double radix):
    cdef Py_ssize_t m = logd.shape[0], n = logd.shape[1], i
    out_arr = np.array(logd, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(m):
            _close_row(&out[i, 0], n, radix)
    return out_arr


def assemble_paths(const double[:, ::1] point, const double[:, :, ::1] errors,
                   const cnp.int64_t[:, :, ::1] err_idx, const double[:, ::1] resid,
                   const cnp.int64_t[:, ::1] res_idx, const double[:, ::1] phi,
                   const double[::1] log_alpha, double radix):
    cdef Py_ssize_t B = err_idx.shape[0], H = point.shape[0], K = point.shape[1]
    cdef Py_ssize_t A = phi.shape[1]
    cdef Py_ssize_t b, h, k, u, r
    cdef double s
    out_arr = np.empty((B, H, A), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for b in range(B):
            for h in range(H):
                r = res_idx[b, h]
                for u in range(A):
                    out[b, h, u] = log_alpha[u] + resid[r, u]
                for k in range(K):
                    s = point[h, k] + errors[h, err_idx[b, h, k], k]
                    for u in range(A):
                        out[b, h, u] += s * phi[k, u]
                _close_row(&out[b, h, 0], A, radix)
    return out_arr


def annuity_prices(const double[:, :, ::1] paths, const cnp.int64_t[::1] ages,
                   const cnp.int64_t[::1] maturities, const double[::1] discounts):
    cdef Py_ssize_t B = paths.shape[0], H = paths.shape[1], A = paths.shape[2]
    cdef Py_ssize_t na = ages.shape[0], nm = maturities.shape[0]
    cdef Py_ssize_t terminal = A - 1
    cdef Py_ssize_t b, i, j, m, u, x, steps, tmax = 0
    cdef double surv, value, l, q
    for m in range(nm):
        if maturities[m] > tmax:
            tmax = maturities[m]
    out_arr = np.full((B, na, nm), np.nan)
    cdef double[:, :, ::1] out = out_arr
    tail_arr = np.empty((H, A), dtype=np.float64)
    cdef double[:, ::1] tail = tail_arr
    val_arr = np.empty(max(tmax, 1), dtype=np.float64)
    cdef double[::1] val = val_arr
    with nogil:
        for b in range(B):
            for j in range(H):
                l = 0.0
                for u in range(A - 1, -1, -1):
                    l += paths[b, j, u]
                    tail[j, u] = l
            for i in range(na):
                x = ages[i]
                steps = tmax
                if terminal - x < steps:
                    steps = terminal - x
                if H < steps:
                    steps = H
                if steps <= 0:
                    continue
                surv = 1.0
                value = 0.0
                for j in range(steps):
                    l = tail[j, x + j]
                    q = paths[b, j, x + j] / l if l > 0 else 1.0
                    surv *= 1.0 - q
                    value += surv * discounts[j]
                    val[j] = value
                for m in range(nm):
                    if x + maturities[m] <= terminal and maturities[m] <= H:
                        out[b, i, m] = val[maturities[m] - 1]
    return out_arr
