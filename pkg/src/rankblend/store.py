"""Prediction and label tables: ingestion, alignment and submission writing."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AlignmentError, ConfigError, FormatError, IngestError, IoError

log = logging.getLogger(__name__)

HEADER = ("id", "proba", "label")
SPLITS = ("dev", "test")


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PredictionTable:
    """Scores for one split, keyed by sample id, in a fixed row order.

    ``ids`` and ``scores`` are read-only numpy arrays. Construction validates
    uniqueness of ids and finiteness of scores; with ``strict`` (the default)
    scores must also lie in [0, 1].
    """

    split: str
    ids: np.ndarray
    scores: np.ndarray
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r}; expected one of {SPLITS}")
        ids = _frozen(self.ids, np.int64)
        scores = _frozen(self.scores, np.float64)
        if ids.ndim != 1 or ids.shape != scores.shape:
            raise IngestError("ids and scores must be 1-d arrays of equal length")
        if ids.size and ids.min() < 0:
            raise IngestError(f"negative id {int(ids.min())}")
        uniq, counts = np.unique(ids, return_counts=True)
        if uniq.size != ids.size:
            raise IngestError(f"duplicate id {int(uniq[counts > 1][0])}")
        if not np.all(np.isfinite(scores)):
            bad = int(ids[~np.isfinite(scores)][0])
            raise IngestError(f"non-finite score for id {bad}")
        if self.strict and scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            bad = int(ids[(scores < 0.0) | (scores > 1.0)][0])
            raise IngestError(f"score for id {bad} outside [0, 1]")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float], split: str = "dev", strict: bool = True):
        return cls(split, list(mapping.keys()), list(mapping.values()), strict=strict)

    def __len__(self) -> int:
        return int(self.ids.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionTable):
            return NotImplemented
        return (
            self.split == other.split
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.scores, other.scores)
        )

    __hash__ = None

    def to_dict(self) -> dict[int, float]:
        return {int(i): float(s) for i, s in zip(self.ids, self.scores)}

    def id_set(self) -> frozenset[int]:
        return frozenset(self.ids.tolist())

    def sorted(self) -> "PredictionTable":
        """Return the table re-ordered to ascending id."""
        order = np.argsort(self.ids, kind="stable")
        return self.with_scores(self.scores[order], ids=self.ids[order])

    def with_scores(self, scores, ids=None, split=None) -> "PredictionTable":
        """Copy with new scores; strictness carries over only if the scores stay in [0, 1]."""
        scores = np.asarray(scores, dtype=np.float64)
        unit = scores.size == 0 or (scores.min() >= 0.0 and scores.max() <= 1.0)
        return PredictionTable(
            split or self.split,
            self.ids if ids is None else ids,
            scores,
            strict=self.strict and bool(unit),
        )

    def in_unit_interval(self) -> bool:
        return bool(self.scores.size == 0 or (self.scores.min() >= 0.0 and self.scores.max() <= 1.0))


@dataclass(frozen=True, eq=False)
class LabelTable:
    """Binary ground-truth labels keyed by sample id."""

    entries: Mapping[int, int]

    def __post_init__(self):
        entries = {}
        for k, v in self.entries.items():
            if v not in (0, 1) or isinstance(v, bool):
                raise IngestError(f"label for id {k} must be 0 or 1, got {v!r}")
            entries[int(k)] = int(v)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelTable):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None

    def id_set(self) -> frozenset[int]:
        return frozenset(self.entries)

    def for_table(self, table: PredictionTable) -> np.ndarray:
        """Labels as a uint8 array in the table's row order.

        Raises AlignmentError unless the label ids and the table ids coincide.
        """
        missing = table.id_set() - self.id_set()
        extra = self.id_set() - table.id_set()
        if missing or extra:
            raise AlignmentError(
                f"label/prediction id mismatch: {len(missing)} ids without labels "
                f"{_preview(missing)}, {len(extra)} labels without predictions {_preview(extra)}"
            )
        return np.fromiter((self.entries[i] for i in table.ids.tolist()), dtype=np.uint8, count=len(table))

    def restrict(self, ids: Iterable[int]) -> "LabelTable":
        return LabelTable({int(i): self.entries[int(i)] for i in ids})

    def covering(self, table: "PredictionTable") -> "LabelTable":
        """Labels restricted to the table's ids; every id in the table must be labelled."""
        missing = table.id_set() - self.id_set()
        if missing:
            raise AlignmentError(f"{len(missing)} predicted ids have no label, e.g. {_preview(missing)}")
        extra = len(self) - len(table)
        if extra:
            log.info("ignoring %d labels without predictions", extra)
        return self.restrict(table.ids.tolist())


@dataclass(frozen=True)
class ModelEntry:
    """A named model with one (dev, test) table pair per seed."""

    name: str
    seeds: tuple[tuple[PredictionTable, PredictionTable], ...]

    def __post_init__(self):
        seeds = tuple((dev, test) for dev, test in self.seeds)
        if not seeds:
            raise ConfigError(f"model {self.name!r} has no seeds")
        for dev, test in seeds:
            if dev.split != "dev" or test.split != "test":
                raise ConfigError(f"model {self.name!r}: seed tables must be (dev, test) pairs")
        for idx, part in ((0, "dev"), (1, "test")):
            first = seeds[0][idx].id_set()
            for k, pair in enumerate(seeds[1:], start=1):
                if pair[idx].id_set() != first:
                    raise AlignmentError(
                        f"model {self.name!r}: {part} ids of seed {k} differ from seed 0"
                    )
        object.__setattr__(self, "seeds", seeds)


def _preview(ids, limit=5) -> str:
    ids = sorted(ids)
    text = ", ".join(str(i) for i in ids[:limit])
    return "[" + text + (", ..." if len(ids) > limit else "") + "]"


# ---------------------------------------------------------------------------
# ingestion


def _parse_id(text: str, where: str) -> int:
    text = text.strip()
    if not text:
        raise IngestError(f"{where}: missing id")
    try:
        value = int(text)
    except ValueError:
        raise IngestError(f"{where}: id {text!r} is not an integer") from None
    if value < 0:
        raise IngestError(f"{where}: id {value} is negative")
    return value


def load_predictions(path, split: str = "dev", strict: bool = True) -> PredictionTable:
    """Read an ``id,proba,label`` CSV into a PredictionTable, keeping file row order.

    The label column is optional and ignored apart from validation. With
    ``strict`` every score must lie in [0, 1]; otherwise any finite real is
    accepted (for logits).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IngestError(f"{path}: file not found") from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    except OSError as exc:
        raise IngestError(f"{path}: cannot read ({exc.strerror})") from None

    reader = csv.reader(io.StringIO(text.lstrip("﻿"), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty file, expected header 'id,proba,label'") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise FormatError(f"{path}: malformed header {','.join(header)!r}, expected 'id,proba,label'")

    ids: list[int] = []
    scores: list[float] = []
    seen: dict[int, int] = {}
    for row in reader:
        line = reader.line_num
        where = f"{path}: row {line}"
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) not in (2, 3):
            raise FormatError(f"{where}: expected 2 or 3 fields, got {len(row)}")
        sid = _parse_id(row[0], where)
        if sid in seen:
            raise IngestError(f"{where}: duplicate id {sid} (first seen at row {seen[sid]})")
        seen[sid] = line
        raw = row[1].strip()
        try:
            score = float(raw)
        except ValueError:
            raise IngestError(f"{where}: score {raw!r} is not a number") from None
        if not math.isfinite(score):
            raise IngestError(f"{where}: non-finite score {raw!r}")
        if strict and not 0.0 <= score <= 1.0:
            raise IngestError(f"{where}: score {raw} outside [0, 1] (use --scores-raw for logits)")
        if len(row) == 3 and row[2].strip() not in ("", "0", "1"):
            raise IngestError(f"{where}: label {row[2]!r} must be empty, 0 or 1")
        ids.append(sid)
        scores.append(score)
    if not ids:
        raise IngestError(f"{path}: no prediction rows")
    return PredictionTable(split, ids, scores, strict=strict)


def load_labels(path) -> LabelTable:
    """Read line-delimited JSON records with integer ``id`` and ``label`` fields.

    Other fields in a record are ignored. Blank lines are skipped.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise IngestError(f"{path}: file not found") from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    except OSError as exc:
        raise IngestError(f"{path}: cannot read ({exc.strerror})") from None

    entries: dict[int, int] = {}
    for lineno, line in enumerate(lines, start=1):
        where = f"{path}: line {lineno}"
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise FormatError(f"{where}: expected a JSON object")
        for key in ("id", "label"):
            if key not in record:
                raise IngestError(f"{where}: missing field {key!r}")
            if not isinstance(record[key], int) or isinstance(record[key], bool):
                raise IngestError(f"{where}: field {key!r} must be an integer, got {record[key]!r}")
        sid, label = record["id"], record["label"]
        if sid < 0:
            raise IngestError(f"{where}: id {sid} is negative")
        if label not in (0, 1):
            raise IngestError(f"{where}: label {label} for id {sid} must be 0 or 1")
        if sid in entries:
            raise IngestError(f"{where}: duplicate id {sid}")
        entries[sid] = label
    if not entries:
        raise IngestError(f"{path}: no label records")
    return LabelTable(entries)


# ---------------------------------------------------------------------------
# alignment


class AlignedTables(list):
    """List of aligned tables; ``dropped[k]`` holds the ids removed from input k."""

    def __init__(self, tables, dropped):
        super().__init__(tables)
        self.dropped: tuple[tuple[int, ...], ...] = tuple(dropped)

    @property
    def n_dropped(self) -> int:
        return sum(len(d) for d in self.dropped)


def align(tables: Sequence[PredictionTable]) -> AlignedTables:
    """Restrict every table to the common id set, in ascending id order.

    Ids outside the intersection are listed per input in ``result.dropped``
    and logged; nothing is removed silently.
    """
    tables = list(tables)
    if not tables:
        return AlignedTables([], [])
    common = tables[0].ids
    for t in tables[1:]:
        common = np.intersect1d(common, t.ids, assume_unique=True)
    common = np.unique(common)
    if common.size == 0:
        raise AlignmentError(f"the {len(tables)} tables share no ids")
    out, dropped = [], []
    for k, t in enumerate(tables):
        keep = np.isin(t.ids, common, assume_unique=True)
        gone = tuple(int(i) for i in np.sort(t.ids[~keep]))
        if gone:
            log.warning("alignment dropped %d ids from table %d: %s", len(gone), k, _preview(gone))
        dropped.append(gone)
        ids = t.ids[keep]
        order = np.argsort(ids, kind="stable")
        out.append(PredictionTable(t.split, ids[order], t.scores[keep][order], strict=t.strict))
    return AlignedTables(out, dropped)


def canonical(tables: Sequence[PredictionTable]) -> list[PredictionTable]:
    """Sort tables to ascending id after checking they share one id set."""
    tables = list(tables)
    if not tables:
        return tables
    ref = tables[0].id_set()
    for k, t in enumerate(tables[1:], start=1):
        if t.id_set() != ref:
            raise AlignmentError(f"table {k} has a different id set from table 0; align first")
    return [t if np.all(np.diff(t.ids) > 0) else t.sorted() for t in tables]


# ---------------------------------------------------------------------------
# writing


def format_score(value: float) -> str:
    """Shortest decimal string that parses back to exactly ``value``."""
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file so no partial file is left."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    except OSError as exc:
        raise IoError(f"{path}: cannot write ({exc.strerror})") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"{path}: cannot write ({exc.strerror})") from None


def submission_text(table: PredictionTable, threshold: float = 0.5, labels: Mapping[int, int] | None = None) -> str:
    lines = ["id,proba,label"]
    for sid, score in zip(table.ids.tolist(), table.scores.tolist()):
        label = labels[sid] if labels is not None else int(score >= threshold)
        lines.append(f"{sid},{format_score(score)},{label}")
    return "\n".join(lines) + "\n"


def write_submission(table: PredictionTable, path, threshold: float = 0.5, labels: Mapping[int, int] | None = None) -> None:
    """Write ``id,proba,label`` rows in table order.

    The label column is ``labels[id]`` when a mapping is given, else
    ``1`` if proba >= threshold and ``0`` otherwise.
    """
    atomic_write_text(path, submission_text(table, threshold, labels))
