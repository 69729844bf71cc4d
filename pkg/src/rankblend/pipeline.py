"""End-to-end ensembling: seed averaging, the greedy operator loop, recipes.

The loop runs competitive rounds. Each round builds one candidate per
operator (simple, rank, power per exponent, simplex-weighted) over the
current pool, keeps the best by dev AUROC and feeds it back into the pool as
a pseudo-model. It stops once a round improves by less than
``improvement_epsilon`` or after ``max_rounds``. The winning steps are stored
in an :class:`EnsembleRecipe`, which replays them on test tables without
re-learning anything.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .averaging import apply_operator, check_weights, seed_average
from .errors import ConfigError, FormatError, IngestError, RecipeError
from .metrics import MetricReport, MetricRow, accuracy, auroc, rank_transform
from .simplex import NelderMeadConfig, optimize_weights
from .store import LabelTable, ModelEntry, PredictionTable, align, atomic_write_text, load_predictions

log = logging.getLogger(__name__)

OPERATORS = ("simple", "rank", "power", "simplex")
RECIPE_FORMAT = "rankblend-recipe/1"

Ref = Union[str, int]


@dataclass(frozen=True)
class LoopConfig:
    exponents: tuple[float, ...] = (2.0, 3.0)
    improvement_epsilon: float = 1e-4
    max_rounds: int = 3
    rank_normalize_inputs: bool = True
    seed_rank: bool = False
    rng_seed: int = 0
    restarts: int = 3
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(sorted(float(e) for e in self.exponents)))
        problems = []
        if not self.improvement_epsilon > 0:
            problems.append("improvement_epsilon must be > 0")
        if self.max_rounds < 1:
            problems.append("max_rounds must be >= 1")
        if any(not math.isfinite(e) or e < 1 for e in self.exponents):
            problems.append("exponents must be finite and >= 1")
        if self.restarts < 1:
            problems.append("restarts must be >= 1")
        if problems:
            raise ConfigError("invalid loop config: " + "; ".join(problems))

    @classmethod
    def from_file(cls, path) -> "LoopConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"{path}: config file not found") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise FormatError(f"{path}: expected a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config fields {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def nelder_mead(self, round_index: int) -> NelderMeadConfig:
        return NelderMeadConfig(restarts=self.restarts, rng_seed=self.rng_seed + round_index)


@dataclass(frozen=True)
class EnsembleStep:
    operator: str
    inputs: tuple[Ref, ...]
    exponent: Optional[float] = None
    weights: Optional[tuple[float, ...]] = None
    dev_auroc: Optional[float] = None


@dataclass(frozen=True)
class EnsembleRecipe:
    """Everything needed to rebuild the final submission from the raw model files.

    ``models`` lists the pool in the order it was aligned. Step inputs refer to
    model names (str) or to earlier steps (int index). The last step's output
    is the submission.
    """

    steps: tuple[EnsembleStep, ...]
    models: tuple[str, ...]
    achieved_dev_auroc: float
    rng_seed: int = 0
    rank_normalize_inputs: bool = True
    seed_rank: bool = False
    toolkit_version: str = __version__

    def __post_init__(self):
        if not self.steps:
            raise RecipeError("recipe has no steps")
        names = set(self.models)
        for k, step in enumerate(self.steps):
            if step.operator not in OPERATORS:
                raise RecipeError(f"step {k}: unknown operator {step.operator!r}")
            if not step.inputs:
                raise RecipeError(f"step {k}: no inputs")
            for ref in step.inputs:
                if isinstance(ref, str):
                    if ref not in names:
                        raise RecipeError(f"step {k}: input {ref!r} is not among the recipe's models")
                elif not (isinstance(ref, int) and 0 <= ref < k):
                    raise RecipeError(f"step {k}: input {ref!r} must name a model or an earlier step")
            if (step.weights is not None) != (step.operator == "simplex"):
                raise RecipeError(f"step {k}: weights must be given exactly for the simplex operator")
            if (step.exponent is not None) != (step.operator == "power"):
                raise RecipeError(f"step {k}: exponent must be given exactly for the power operator")
            if step.weights is not None:
                try:
                    check_weights(step.weights, len(step.inputs))
                except ConfigError as exc:
                    raise RecipeError(f"step {k}: {exc}") from None

    @property
    def round_aurocs(self) -> list[float]:
        return [s.dev_auroc for s in self.steps]

    def to_dict(self) -> dict:
        steps = []
        for s in self.steps:
            steps.append(
                {
                    "operator": s.operator,
                    "inputs": [{"model": r} if isinstance(r, str) else {"step": r} for r in s.inputs],
                    "exponent": s.exponent,
                    "weights": None if s.weights is None else list(s.weights),
                    "dev_auroc": s.dev_auroc,
                }
            )
        return {
            "format": RECIPE_FORMAT,
            "toolkit_version": self.toolkit_version,
            "rng_seed": self.rng_seed,
            "models": list(self.models),
            "rank_normalize_inputs": self.rank_normalize_inputs,
            "seed_rank": self.seed_rank,
            "steps": steps,
            "achieved_dev_auroc": self.achieved_dev_auroc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleRecipe":
        try:
            steps = []
            for raw in data["steps"]:
                refs = []
                for ref in raw["inputs"]:
                    if "model" in ref:
                        refs.append(str(ref["model"]))
                    else:
                        refs.append(int(ref["step"]))
                weights = raw.get("weights")
                steps.append(
                    EnsembleStep(
                        operator=raw["operator"],
                        inputs=tuple(refs),
                        exponent=None if raw.get("exponent") is None else float(raw["exponent"]),
                        weights=None if weights is None else tuple(float(w) for w in weights),
                        dev_auroc=raw.get("dev_auroc"),
                    )
                )
            return cls(
                steps=tuple(steps),
                models=tuple(str(m) for m in data["models"]),
                achieved_dev_auroc=float(data["achieved_dev_auroc"]),
                rng_seed=int(data.get("rng_seed", 0)),
                rank_normalize_inputs=bool(data.get("rank_normalize_inputs", True)),
                seed_rank=bool(data.get("seed_rank", False)),
                toolkit_version=str(data.get("toolkit_version", "unknown")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RecipeError(f"malformed recipe: {exc!r}") from None

    @classmethod
    def load(cls, path) -> "EnsembleRecipe":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise RecipeError(f"{path}: recipe file not found") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise FormatError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def save(self, path) -> None:
        atomic_write_text(path, self.to_json())


# ---------------------------------------------------------------------------
# model discovery and preparation


def discover_models(models_dir, strict: bool = True) -> list[ModelEntry]:
    """Load ``<models_dir>/<model>/<seed>/{dev,test}.csv``; models and seeds in name order."""
    root = Path(models_dir)
    if not root.is_dir():
        raise IngestError(f"{root}: models directory not found")
    models = []
    for model_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        seeds = []
        for seed_dir in sorted(p for p in model_dir.iterdir() if p.is_dir()):
            pair = []
            for split in ("dev", "test"):
                path = seed_dir / f"{split}.csv"
                if not path.is_file():
                    raise IngestError(f"{path}: missing {split} predictions")
                pair.append(load_predictions(path, split, strict=strict))
            seeds.append(tuple(pair))
        if not seeds:
            raise IngestError(f"{model_dir}: no seed directories with dev.csv/test.csv")
        models.append(ModelEntry(model_dir.name, tuple(seeds)))
    if not models:
        raise ConfigError(f"{root}: no model directories found")
    return models


def _check_names(models: Sequence[ModelEntry]) -> None:
    if not models:
        raise ConfigError("at least one model is required")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate model names: {names}")


def prepare(
    models: Sequence[ModelEntry], split: str, rank_normalize: bool, seed_rank: bool = False
) -> dict[str, PredictionTable]:
    """Seed-average, align across models and optionally rank-normalize one split."""
    idx = 0 if split == "dev" else 1
    averaged = [seed_average(m, rank=seed_rank)[idx] for m in models]
    aligned = align(averaged)
    for m, gone in zip(models, aligned.dropped):
        if gone:
            log.warning("%s split: model %s loses %d ids in alignment", split, m.name, len(gone))
    if rank_normalize:
        aligned = [rank_transform(t) for t in aligned]
    return {m.name: t for m, t in zip(models, aligned)}


# ---------------------------------------------------------------------------
# the loop


@dataclass
class _Candidate:
    step: EnsembleStep
    dev: PredictionTable
    auroc: float


def _candidates(refs, dev_pool, labels, cfg, round_index):
    tables = [dev_pool[r] for r in refs]
    out = []

    def add(op, exponent=None, weights=None, dev=None):
        if dev is None:
            dev = apply_operator(op, tables, exponent=exponent, weights=weights)
        step = EnsembleStep(op, tuple(refs), exponent, None if weights is None else tuple(weights.tolist()))
        out.append(_Candidate(step, dev, auroc(dev, labels)))

    add("simple")
    add("rank")
    if all(t.in_unit_interval() for t in tables):
        for e in cfg.exponents:
            add("power", exponent=e)
    if len(tables) >= 2:
        weights, _, _ = optimize_weights(tables, labels, cfg.nelder_mead(round_index))
        best_w = weights
        best = auroc(apply_operator("simplex", tables, weights=weights), labels)
        # simplex vertices: the single-input mixtures softmax can only approach
        for k in range(len(tables)):
            onehot = np.zeros(len(tables))
            onehot[k] = 1.0
            score = auroc(apply_operator("simplex", tables, weights=onehot), labels)
            if score > best:
                best, best_w = score, onehot
        add("simplex", weights=best_w)
    return out


def run_ensemble_loop(
    models: Sequence[ModelEntry], labels: LabelTable, cfg: LoopConfig = LoopConfig()
) -> tuple[EnsembleRecipe, PredictionTable, MetricReport]:
    """Learn a recipe on dev predictions and return it with the replayed test table."""
    _check_names(models)
    dev_pool: dict[Ref, PredictionTable] = prepare(models, "dev", cfg.rank_normalize_inputs, cfg.seed_rank)
    test_pool: dict[Ref, PredictionTable] = prepare(models, "test", cfg.rank_normalize_inputs, cfg.seed_rank)
    labels = labels.covering(next(iter(dev_pool.values())))
    refs: list[Ref] = [m.name for m in models]

    steps: list[EnsembleStep] = []
    current = -math.inf
    for r in range(cfg.max_rounds):
        cands = _candidates(refs, dev_pool, labels, cfg, r)
        winner = cands[0]
        for c in cands[1:]:
            if c.auroc > winner.auroc:
                winner = c
        gain = winner.auroc - current
        log.info("round %d: best %s dev AUROC %.6f (gain %.6g)", r, winner.step.operator, winner.auroc, gain)
        if steps and gain < cfg.improvement_epsilon:
            break
        k = len(steps)
        steps.append(replace(winner.step, dev_auroc=winner.auroc))
        dev_pool[k] = winner.dev
        test_pool[k] = apply_operator(
            winner.step.operator,
            [test_pool[ref] for ref in winner.step.inputs],
            exponent=winner.step.exponent,
            weights=winner.step.weights,
        )
        refs.append(k)
        current = winner.auroc

    recipe = EnsembleRecipe(
        steps=tuple(steps),
        models=tuple(m.name for m in models),
        achieved_dev_auroc=current,
        rng_seed=cfg.rng_seed,
        rank_normalize_inputs=cfg.rank_normalize_inputs,
        seed_rank=cfg.seed_rank,
    )
    final_test = test_pool[len(steps) - 1]
    rows = [MetricRow(m.name, auroc(dev_pool[m.name], labels)) for m in models]
    rows.append(MetricRow("Ensemble", current))
    return recipe, final_test, MetricReport(tuple(rows))


def apply_recipe(recipe: EnsembleRecipe, models: Sequence[ModelEntry], split: str = "test") -> PredictionTable:
    """Replay the recipe's steps on one split of the given models; nothing is re-learned."""
    if recipe.toolkit_version != __version__:
        warnings.warn(
            f"recipe written by toolkit {recipe.toolkit_version}, replaying with {__version__}",
            stacklevel=2,
        )
    by_name = {m.name: m for m in models}
    missing = [n for n in recipe.models if n not in by_name]
    if missing:
        raise RecipeError(f"recipe needs models not in the pool: {missing}")
    chosen = [by_name[n] for n in recipe.models]
    pool: dict[Ref, PredictionTable] = prepare(chosen, split, recipe.rank_normalize_inputs, recipe.seed_rank)
    for k, step in enumerate(recipe.steps):
        pool[k] = apply_operator(
            step.operator, [pool[r] for r in step.inputs], exponent=step.exponent, weights=step.weights
        )
    return pool[len(recipe.steps) - 1]


def make_report(
    models: Sequence[ModelEntry],
    recipe: EnsembleRecipe,
    labels_dev: LabelTable,
    labels_test: Optional[LabelTable] = None,
    threshold: float = 0.5,
) -> MetricReport:
    """Per-model and ensemble rows: dev AUROC, test AUROC (if labelled) and dev accuracy.

    Model rows use seed-averaged probabilities, so accuracy is meaningful for
    them; the ensemble row uses the recipe's output, which is a rank score
    when inputs were rank-normalized.
    """
    _check_names(models)
    dev = prepare(models, "dev", rank_normalize=False, seed_rank=recipe.seed_rank)
    labels_dev = labels_dev.covering(next(iter(dev.values())))
    test = None
    if labels_test is not None:
        test = prepare(models, "test", rank_normalize=False, seed_rank=recipe.seed_rank)
        labels_test = labels_test.covering(next(iter(test.values())))

    def row(name, dev_table, test_table):
        return MetricRow(
            name,
            auroc(dev_table, labels_dev),
            None if test_table is None else auroc(test_table, labels_test),
            accuracy(dev_table, labels_dev, threshold),
        )

    rows = [row(m.name, dev[m.name], None if test is None else test[m.name]) for m in models]
    ens_dev = apply_recipe(recipe, models, "dev")
    ens_test = apply_recipe(recipe, models, "test") if test is not None else None
    rows.append(row("Ensemble", ens_dev, ens_test))
    return MetricReport(tuple(rows))
