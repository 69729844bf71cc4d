"""Independent reference computations used as test oracles.

Nothing here calls into rankblend's kernels.
"""

import itertools
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata


def brute_force_auroc(scores, labels):
    """Loop over every (positive, negative) pair: +1 concordant, +1/2 tied."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = Fraction(0)
    for p in pos:
        for n in neg:
            if p > n:
                total += 1
            elif p == n:
                total += Fraction(1, 2)
    return float(total / (len(pos) * len(neg)))


def hand_accuracy(scores, labels, threshold):
    hits = 0
    for s, y in zip(scores, labels):
        predicted = 1 if s >= threshold else 0
        hits += predicted == y
    return hits / len(scores)


def simplex_grid(m, resolution):
    """All weight vectors with entries k/resolution summing to 1."""
    rows = []
    for head in itertools.product(range(resolution + 1), repeat=m - 1):
        if sum(head) <= resolution:
            rows.append(list(head) + [resolution - sum(head)])
    return np.array(rows, dtype=float) / resolution


def grid_best_auroc(matrix, y, resolution=20, chunk=2000):
    """Best mixture AUROC over the weight grid, via scipy midranks (U statistic)."""
    y = np.asarray(y).astype(bool)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    grid = simplex_grid(matrix.shape[0], resolution)
    best, best_w = -1.0, None
    for start in range(0, len(grid), chunk):
        w = grid[start : start + chunk]
        ranks = rankdata(w @ matrix, axis=1)
        aucs = (ranks[:, y].sum(axis=1) - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
        k = int(np.argmax(aucs))
        if aucs[k] > best:
            best, best_w = float(aucs[k]), w[k]
    return best, best_w


def scipy_midrank_normalized(values):
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return np.array([0.5])
    return (rankdata(values) - 1) / (values.size - 1)
