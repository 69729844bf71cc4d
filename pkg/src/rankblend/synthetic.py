"""Seeded synthetic prediction pools with controllable skill and correlation.

Each model-seed score is ``logistic(s_m * (2y - 1) + w * g + (1 - w) * e)``
where ``g`` is standard normal noise shared by every model on a sample and
``e`` is standard normal noise private to one model-seed. All draws come from
one numpy PCG64 generator seeded with ``rng_seed``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, IoError
from .store import LabelTable, ModelEntry, PredictionTable, atomic_write_text, write_submission


@dataclass(frozen=True)
class SyntheticConfig:
    n_samples: int = 500
    n_models: int = 5
    n_seeds: int = 3
    positive_rate: float = 0.5
    signal_strength: tuple[float, ...] = (0.3, 0.35, 0.4, 0.45, 0.5)
    shared_noise_weight: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "signal_strength", tuple(float(s) for s in self.signal_strength))
        problems = []
        if self.n_samples < 4:
            problems.append("n_samples must be >= 4")
        if self.n_models < 1:
            problems.append("n_models must be >= 1")
        if self.n_seeds < 1:
            problems.append("n_seeds must be >= 1")
        if not 0.0 < self.positive_rate < 1.0:
            problems.append("positive_rate must lie in (0, 1)")
        if len(self.signal_strength) != self.n_models:
            problems.append(f"signal_strength has {len(self.signal_strength)} entries for {self.n_models} models")
        if any(not math.isfinite(s) or s < 0 for s in self.signal_strength):
            problems.append("signal strengths must be finite and >= 0")
        if not 0.0 <= self.shared_noise_weight <= 1.0:
            problems.append("shared_noise_weight must lie in [0, 1]")
        if problems:
            raise ConfigError("invalid synthetic config: " + "; ".join(problems))

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synthetic config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid synthetic config: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "SyntheticConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"{path}: config file not found") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise FormatError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["signal_strength"] = list(self.signal_strength)
        return d


_LOW, _HIGH = 1e-300, 1.0 - 2.0**-53


def _logistic(x):
    return np.clip(1.0 / (1.0 + np.exp(-x)), _LOW, _HIGH)


def _labels(rng, n, rate):
    n_pos = min(max(int(round(n * rate)), 1), n - 1)
    y = np.zeros(n, dtype=np.int64)
    y[:n_pos] = 1
    return rng.permutation(y)


def generate(cfg: SyntheticConfig) -> tuple[list[ModelEntry], LabelTable, LabelTable]:
    """Draw a pool of models plus dev and test labels.

    Dev ids are ``0..n-1`` and test ids ``n..2n-1``. The number of positives in
    each split is ``round(n * positive_rate)`` clipped to [1, n - 1], so both
    classes are always present.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n, w = cfg.n_samples, cfg.shared_noise_weight
    splits = {}
    for split, offset in (("dev", 0), ("test", n)):
        y = _labels(rng, n, cfg.positive_rate)
        shared = rng.standard_normal(n)
        scores = [
            [
                _logistic(s * (2 * y - 1) + w * shared + (1 - w) * rng.standard_normal(n))
                for _ in range(cfg.n_seeds)
            ]
            for s in cfg.signal_strength
        ]
        splits[split] = (np.arange(offset, offset + n), y, scores)

    models = []
    for m in range(cfg.n_models):
        seeds = []
        for k in range(cfg.n_seeds):
            pair = tuple(
                PredictionTable(split, splits[split][0], splits[split][2][m][k]) for split in ("dev", "test")
            )
            seeds.append(pair)
        models.append(ModelEntry(f"model_{m}", tuple(seeds)))

    def label_table(split):
        ids, y, _ = splits[split]
        return LabelTable(dict(zip(ids.tolist(), y.tolist())))

    return models, label_table("dev"), label_table("test")


def labels_text(labels: LabelTable) -> str:
    return "".join(json.dumps({"id": i, "label": l}) + "\n" for i, l in sorted(labels.entries.items()))


def write_pool(models, dev_labels: LabelTable, test_labels: LabelTable, out_dir) -> None:
    """Write ``<out>/<model>/<seed>/{dev,test}.csv`` plus ``dev_labels.jsonl`` and ``test_labels.jsonl``."""
    out = Path(out_dir)
    for entry in models:
        for k, (dev, test) in enumerate(entry.seeds):
            seed_dir = out / entry.name / f"seed_{k}"
            try:
                seed_dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise IoError(f"{seed_dir}: cannot create directory ({exc.strerror})") from None
            write_submission(dev, seed_dir / "dev.csv")
            write_submission(test, seed_dir / "test.csv")
    atomic_write_text(out / "dev_labels.jsonl", labels_text(dev_labels))
    atomic_write_text(out / "test_labels.jsonl", labels_text(test_labels))
