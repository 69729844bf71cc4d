"""Non-learned combination operators: seed, simple, rank and power averaging.

Every operator first puts its inputs into ascending-id order, so the row
order of the inputs never affects the output.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DomainError
from .metrics import rank_transform
from .store import ModelEntry, PredictionTable, canonical

WEIGHT_TOL = 1e-12


def check_weights(weights, n: int) -> np.ndarray:
    """Validate a weight vector: length n, non-negative, summing to 1 within 1e-12."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size != n:
        raise ConfigError(f"expected {n} weights, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ConfigError(f"weights must be finite and non-negative: {w.tolist()}")
    if abs(math.fsum(w.tolist()) - 1.0) > WEIGHT_TOL:
        raise ConfigError(f"weights must sum to 1, got {math.fsum(w.tolist())!r}")
    return w


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def stack(tables: Sequence[PredictionTable]) -> tuple[list[PredictionTable], np.ndarray]:
    """Canonicalize tables and return them with an (n_tables, n_rows) score matrix."""
    tables = canonical(tables)
    if not tables:
        raise ConfigError("at least one table is required")
    return tables, np.vstack([t.scores for t in tables])


def _mix(tables, weights):
    tables, matrix = stack(tables)
    w = uniform_weights(len(tables)) if weights is None else check_weights(weights, len(tables))
    unit = all(t.in_unit_interval() for t in tables)
    out = kernels.mixture(matrix, w, unit)
    first = tables[0]
    return PredictionTable(first.split, first.ids, out, strict=unit and all(t.strict for t in tables))


def simple_average(tables: Sequence[PredictionTable], weights=None) -> PredictionTable:
    """Weighted arithmetic mean per id; uniform weights by default."""
    return _mix(tables, weights)


def rank_average(tables: Sequence[PredictionTable], weights=None) -> PredictionTable:
    """simple_average of the rank-transformed tables."""
    return _mix([rank_transform(t) for t in canonical(tables)], weights)


def power_average(tables: Sequence[PredictionTable], exponent: float, weights=None) -> PredictionTable:
    """Weighted mean of score ** exponent per id, without renormalization.

    Scores must lie in [0, 1] and the exponent must be finite and >= 1.
    """
    exponent = float(exponent)
    if not math.isfinite(exponent) or exponent < 1.0:
        raise ConfigError(f"power exponent must be finite and >= 1, got {exponent}")
    powered = []
    for k, t in enumerate(canonical(tables)):
        if not t.in_unit_interval():
            raise DomainError(f"power averaging needs scores in [0, 1]; table {k} has values outside")
        powered.append(t.with_scores(np.power(t.scores, exponent)))
    return _mix(powered, weights)


def seed_average(entry: ModelEntry, rank: bool = False) -> tuple[PredictionTable, PredictionTable]:
    """Uniform mean over a model's seeds, separately for dev and test.

    With ``rank`` the seeds are rank-averaged instead, for models whose seeds
    are not calibrated against each other.
    """
    op = rank_average if rank else simple_average
    dev = op([d for d, _ in entry.seeds])
    test = op([t for _, t in entry.seeds])
    return dev, test


def apply_operator(
    op: str,
    tables: Sequence[PredictionTable],
    exponent: Optional[float] = None,
    weights=None,
) -> PredictionTable:
    """Dispatch by operator name: simple, rank, power or simplex (weighted simple)."""
    if op == "simple":
        return simple_average(tables, weights)
    if op == "rank":
        return rank_average(tables, weights)
    if op == "power":
        if exponent is None:
            raise ConfigError("power averaging requires an exponent")
        return power_average(tables, exponent, weights)
    if op == "simplex":
        if weights is None:
            raise ConfigError("simplex operator requires weights")
        return simple_average(tables, weights)
    raise ConfigError(f"unknown operator {op!r}")
