# cython: language_level=3
"""Compiled spike kernels.

Event-driven inner loops: a zero spike bit skips its weight column
entirely. All accumulation is exact int64 arithmetic; results are
bit-identical to the NumPy fallback in ``_py``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def unfold_unary(cnp.int64_t[::1] values, int timesteps):
    cdef Py_ssize_t n = values.shape[0]
    out = np.zeros((timesteps, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] planes = out
    cdef Py_ssize_t i
    cdef int t
    cdef cnp.int64_t residual
    for i in range(n):
        residual = values[i]
        for t in range(timesteps):
            if residual < 1:
                break
            planes[t, i] = 1
            residual -= 1
    return out


def unfold_binary(cnp.int64_t[::1] magnitudes, int timesteps):
    cdef Py_ssize_t n = magnitudes.shape[0]
    out = np.zeros((timesteps, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] planes = out
    cdef Py_ssize_t i
    cdef int t
    cdef cnp.int64_t residual, weight
    for i in range(n):
        residual = magnitudes[i]
        for t in range(timesteps, 0, -1):
            weight = (<cnp.int64_t>1) << (t - 1)
            if residual >= weight:
                planes[t - 1, i] = 1
                residual -= weight
    return out


def fold_planes(cnp.uint8_t[:, ::1] planes, cnp.int64_t[::1] weights,
                cnp.int8_t[::1] polarity):
    cdef Py_ssize_t t_count = planes.shape[0]
    cdef Py_ssize_t n = planes.shape[1]
    out = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] values = out
    cdef Py_ssize_t i, t
    cdef cnp.int64_t acc
    for i in range(n):
        acc = 0
        for t in range(t_count):
            if planes[t, i]:
                acc += weights[t]
        values[i] = acc * polarity[i]
    return out


def gated_accumulate(cnp.int64_t[:, ::1] wt, cnp.uint8_t[:, :, ::1] planes,
                     cnp.int8_t[:, ::1] polarity, cnp.int64_t[::1] weights):
    # wt (D, M); planes (T, B, D); polarity (B, D) -> (B, M)
    cdef Py_ssize_t t_count = planes.shape[0]
    cdef Py_ssize_t batch = planes.shape[1]
    cdef Py_ssize_t d = planes.shape[2]
    cdef Py_ssize_t m = wt.shape[1]
    out = np.zeros((batch, m), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] acc = out
    partial_buf = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] partial = partial_buf
    cdef Py_ssize_t b, i, r, t
    cdef cnp.int64_t tw
    for b in range(batch):
        for t in range(t_count):
            for r in range(m):
                partial[r] = 0
            for i in range(d):
                if planes[t, b, i]:
                    if polarity[b, i] < 0:
                        for r in range(m):
                            partial[r] -= wt[i, r]
                    else:
                        for r in range(m):
                            partial[r] += wt[i, r]
            tw = weights[t]
            for r in range(m):
                acc[b, r] += tw * partial[r]
    return out


def pe_dot(cnp.uint8_t[:, ::1] planes, cnp.int8_t[::1] polarity,
           cnp.int64_t[::1] w):
    cdef Py_ssize_t t_count = planes.shape[0]
    cdef Py_ssize_t lanes = planes.shape[1]
    cdef cnp.int64_t total = 0
    cdef cnp.int64_t partial
    cdef Py_ssize_t i, t
    for t in range(t_count):
        partial = 0
        for i in range(lanes):
            if planes[t, i]:
                if polarity[i] < 0:
                    partial -= w[i]
                else:
                    partial += w[i]
        total += ((<cnp.int64_t>1) << t) * partial
    return int(total)


def spike_gemm(cnp.uint8_t[:, :, ::1] planes, cnp.int8_t[:, ::1] polarity,
               cnp.int64_t[:, ::1] w):
    # planes (T, M, K); polarity (M, K); w (K, N) -> (M, N)
    cdef Py_ssize_t t_count = planes.shape[0]
    cdef Py_ssize_t m = planes.shape[1]
    cdef Py_ssize_t k = planes.shape[2]
    cdef Py_ssize_t n = w.shape[1]
    out = np.zeros((m, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] acc = out
    cdef Py_ssize_t i, j, kk, t
    cdef cnp.int64_t shift
    for i in range(m):
        for t in range(t_count):
            shift = (<cnp.int64_t>1) << t
            for kk in range(k):
                if planes[t, i, kk]:
                    if polarity[i, kk] < 0:
                        for j in range(n):
                            acc[i, j] -= shift * w[kk, j]
                    else:
                        for j in range(n):
                            acc[i, j] += shift * w[kk, j]
    return out
