"""Dev-AUROC weight learning by Nelder-Mead over a softmax parameterization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._backend import kernels
from .averaging import stack, uniform_weights
from .errors import ConfigError, ObjectiveError
from .metrics import _check_classes
from .store import LabelTable, PredictionTable


@dataclass(frozen=True)
class NelderMeadConfig:
    """Coefficients and stopping rules for :func:`nelder_mead`.

    ``max_iters=None`` means 200 iterations per dimension. ``restarts`` and
    ``tie_penalty`` are used by :func:`optimize_weights` only.
    """

    alpha: float = 1.0
    gamma: float = 2.0
    rho: float = 0.5
    sigma: float = 0.5
    initial_step: float = 0.05
    tol_spread: float = 1e-6
    max_iters: Optional[int] = None
    restarts: int = 3
    rng_seed: int = 0
    tie_penalty: float = 1e-6

    def __post_init__(self):
        problems = []
        if not self.alpha > 0:
            problems.append("alpha must be > 0")
        if not self.gamma > 1:
            problems.append("gamma must be > 1")
        if not 0 < self.rho < 1:
            problems.append("rho must lie in (0, 1)")
        if not 0 < self.sigma < 1:
            problems.append("sigma must lie in (0, 1)")
        if not self.initial_step > 0:
            problems.append("initial_step must be > 0")
        if not self.tol_spread > 0:
            problems.append("tol_spread must be > 0")
        if self.max_iters is not None and self.max_iters < 0:
            problems.append("max_iters must be >= 0")
        if self.restarts < 1:
            problems.append("restarts must be >= 1")
        if not 0 <= self.tie_penalty < 1e-5:
            problems.append("tie_penalty must lie in [0, 1e-5)")
        if problems:
            raise ConfigError("invalid Nelder-Mead config: " + "; ".join(problems))

    def iterations_for(self, dim: int) -> int:
        return 200 * dim if self.max_iters is None else self.max_iters


@dataclass(frozen=True)
class TraceRecord:
    restart: int
    iteration: int
    best_objective: float
    point: tuple[float, ...]


@dataclass
class OptimizationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    weights: Optional[tuple[float, ...]] = None
    dev_auroc: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def best_by_restart(self) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for r in self.records:
            out.setdefault(r.restart, []).append(r.best_objective)
        return out


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    cfg: NelderMeadConfig = NelderMeadConfig(),
    restart: int = 0,
) -> tuple[np.ndarray, float, OptimizationTrace]:
    """Minimize ``objective`` from ``x0`` with the reflect/expand/contract/shrink simplex.

    The initial simplex is ``x0`` plus ``initial_step`` along each axis. Stops
    when max(f) - min(f) over the vertices drops below ``tol_spread`` or after
    ``max_iters`` iterations. Vertices with equal values keep their previous
    order, so runs are deterministic.
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    dim = x0.size
    if dim < 1:
        raise ConfigError("nelder_mead needs at least one dimension")

    def f(x):
        value = float(objective(x))
        if not math.isfinite(value):
            raise ObjectiveError(f"objective returned {value} at {x.tolist()}", point=x.copy())
        return value

    simplex = np.vstack([x0, x0 + cfg.initial_step * np.eye(dim)])
    values = np.array([f(v) for v in simplex])
    trace = OptimizationTrace()
    max_iters = cfg.iterations_for(dim)

    iteration = 0
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        trace.records.append(TraceRecord(restart, iteration, float(values[0]), tuple(simplex[0].tolist())))
        if values[-1] - values[0] < cfg.tol_spread or iteration >= max_iters:
            break
        iteration += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + cfg.alpha * (centroid - worst)
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + cfg.gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + cfg.rho * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + cfg.rho * (worst - centroid)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0].copy()
        for i in range(1, dim + 1):
            simplex[i] = best + cfg.sigma * (simplex[i] - best)
            values[i] = f(simplex[i])

    return simplex[0].copy(), float(values[0]), trace


def softmax_to_simplex(z) -> np.ndarray:
    """Map a real vector onto the probability simplex; shifted by max(z) so it never overflows."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def optimize_weights(
    dev_tables: Sequence[PredictionTable],
    labels: LabelTable,
    cfg: NelderMeadConfig = NelderMeadConfig(),
) -> tuple[np.ndarray, float, OptimizationTrace]:
    """Learn mixture weights maximizing dev AUROC of the weighted simple average.

    Minimizes -AUROC(mix(softmax(z))) + tie_penalty * ||softmax(z) - uniform||^2.
    Restart 0 starts from z = 0 (uniform weights); later restarts add uniform
    [-0.5, 0.5] jitter drawn from ``cfg.rng_seed``. The lowest penalized
    objective wins, earlier restarts winning ties. Since restart 0 starts at the
    uniform mixture, the result is never below it.
    """
    tables, matrix = stack(dev_tables)
    if len(tables) < 2:
        raise ConfigError("optimize_weights needs at least two tables")
    y = labels.for_table(tables[0])
    _check_classes(y)
    m = len(tables)
    unit = all(t.in_unit_interval() for t in tables)
    uniform = uniform_weights(m)

    def objective(z):
        w = softmax_to_simplex(z)
        score = kernels.mixture_auroc(matrix, w, y, unit)
        return -score + cfg.tie_penalty * float(np.sum((w - uniform) ** 2))

    rng = np.random.default_rng(cfg.rng_seed)
    trace = OptimizationTrace()
    best_z, best_f = None, math.inf
    for r in range(cfg.restarts):
        start = np.zeros(m) if r == 0 else rng.uniform(-0.5, 0.5, size=m)
        z, fz, run = nelder_mead(objective, start, cfg, restart=r)
        trace.records.extend(
            TraceRecord(rec.restart, rec.iteration, rec.best_objective, tuple(softmax_to_simplex(rec.point).tolist()))
            for rec in run.records
        )
        if fz < best_f:
            best_z, best_f = z, fz

    weights = softmax_to_simplex(best_z)
    dev_auroc = float(kernels.mixture_auroc(matrix, weights, y, unit))
    trace.weights = tuple(weights.tolist())
    trace.dev_auroc = dev_auroc
    return weights, dev_auroc, trace
