"""Pure-Python (numpy) kernels.

Reference backend and fallback when the compiled extension is unavailable.
Every function here performs the same floating-point operations, in the same
order, as its counterpart in ``_kernels.pyx`` so both backends agree bitwise.
"""

import numpy as np


def _groups(sorted_scores):
    n = sorted_scores.shape[0]
    starts = np.flatnonzero(np.r_[True, sorted_scores[1:] != sorted_scores[:-1]])
    ends = np.r_[starts[1:], n] - 1
    return starts, ends


def auroc(scores, labels):
    """Exact Mann-Whitney AUROC with half credit for ties; nan if one class is absent."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    n = scores.shape[0]
    n_pos = int(np.count_nonzero(labels))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(scores, kind="stable")
    starts, ends = _groups(scores[order])
    pos = np.add.reduceat(labels[order].astype(np.int64), starts)
    neg = (ends - starts + 1) - pos
    neg_below = np.cumsum(neg) - neg
    twice_u = int(np.sum(2 * pos * neg_below + pos * neg))
    return twice_u / (2 * n_pos * n_neg)


def midranks(scores):
    """Midranks mapped affinely onto [0, 1]: (midrank - 1) / (n - 1); 0.5 when n == 1."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    n = scores.shape[0]
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    if n == 1:
        out[0] = 0.5
        return out
    order = np.argsort(scores, kind="stable")
    starts, ends = _groups(scores[order])
    values = (starts + ends).astype(np.float64) / (2.0 * (n - 1))
    out[order] = np.repeat(values, ends - starts + 1)
    return out


def mixture(matrix, weights, clip):
    """Weighted per-column sum of the rows of ``matrix``, accumulated row by row."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    acc = np.zeros(matrix.shape[1], dtype=np.float64)
    for k in range(matrix.shape[0]):
        acc = acc + weights[k] * matrix[k]
    if clip:
        acc = np.minimum(np.maximum(acc, 0.0), 1.0)
    return acc


def mixture_auroc(matrix, weights, labels, clip):
    return auroc(mixture(matrix, weights, clip), labels)
