# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; bitwise-compatible with ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef double _merge_count(const double[::1] pos, const double[::1] neg) noexcept nogil:
    # both inputs ascending; counts 2*(neg < x) + (neg == x) summed over positives
    cdef Py_ssize_t n_pos = pos.shape[0], n_neg = neg.shape[0], i, lo = 0, hi = 0
    cdef long long twice_u = 0
    cdef double x
    for i in range(n_pos):
        x = pos[i]
        while lo < n_neg and neg[lo] < x:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n_neg and neg[hi] <= x:
            hi += 1
        twice_u += lo + hi
    return <double> twice_u / <double> (2 * <long long> n_pos * <long long> n_neg)


cdef double _auroc(const double[::1] scores, const unsigned char[::1] labels) except? -1.0:
    cdef Py_ssize_t n = scores.shape[0], i, a = 0, b = 0, n_pos = 0
    for i in range(n):
        if labels[i]:
            n_pos += 1
    if n_pos == 0 or n_pos == n:
        return float("nan")
    pos_arr = np.empty(n_pos, dtype=np.float64)
    neg_arr = np.empty(n - n_pos, dtype=np.float64)
    cdef double[::1] pos = pos_arr
    cdef double[::1] neg = neg_arr
    for i in range(n):
        if labels[i]:
            pos[a] = scores[i]
            a += 1
        else:
            neg[b] = scores[i]
            b += 1
    pos_arr.sort()
    neg_arr.sort()
    return _merge_count(pos_arr, neg_arr)


def auroc(scores, labels):
    """Exact Mann-Whitney AUROC with half credit for ties; nan if one class is absent."""
    cdef const double[::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const unsigned char[::1] l = np.ascontiguousarray(labels, dtype=np.uint8)
    return _auroc(s, l)


def midranks(scores):
    """Midranks mapped affinely onto [0, 1]: (midrank - 1) / (n - 1); 0.5 when n == 1."""
    cdef const double[::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], i, j, k
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double value
    if n == 0:
        return out_arr
    if n == 1:
        out[0] = 0.5
        return out_arr
    # tie order is irrelevant here, so the default (unstable) sort is fine
    order_arr = np.argsort(s)
    cdef const cnp.intp_t[::1] order = order_arr
    i = 0
    while i < n:
        j = i + 1
        while j < n and s[order[j]] == s[order[i]]:
            j += 1
        value = <double> (i + j - 1) / (2.0 * (n - 1))
        for k in range(i, j):
            out[order[k]] = value
        i = j
    return out_arr


cdef void _mix(const double[:, ::1] matrix, const double[::1] weights, bint clip, double[::1] out) noexcept nogil:
    cdef Py_ssize_t m = matrix.shape[0], n = matrix.shape[1], j, k
    cdef double acc
    for j in range(n):
        acc = 0.0
        for k in range(m):
            acc = acc + weights[k] * matrix[k, j]
        if clip:
            if acc < 0.0:
                acc = 0.0
            elif acc > 1.0:
                acc = 1.0
        out[j] = acc


def mixture(matrix, weights, clip):
    """Weighted per-column sum of the rows of ``matrix``, accumulated row by row."""
    cdef const double[:, ::1] x = np.ascontiguousarray(matrix, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    out_arr = np.empty(x.shape[1], dtype=np.float64)
    cdef double[::1] out = out_arr
    _mix(x, w, clip, out)
    return out_arr


def mixture_auroc(matrix, weights, labels, clip):
    cdef const double[:, ::1] x = np.ascontiguousarray(matrix, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const unsigned char[::1] l = np.ascontiguousarray(labels, dtype=np.uint8)
    out_arr = np.empty(x.shape[1], dtype=np.float64)
    cdef double[::1] out = out_arr
    _mix(x, w, clip, out)
    return _auroc(out, l)
