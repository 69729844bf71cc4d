import numpy as np
import pytest

from rankblend.store import LabelTable, PredictionTable


def make_table(scores, ids=None, split="dev", strict=True):
    scores = np.asarray(scores, dtype=float)
    ids = np.arange(len(scores)) if ids is None else ids
    return PredictionTable(split, ids, scores, strict=strict)


def make_labels(labels, ids=None):
    ids = range(len(labels)) if ids is None else ids
    return LabelTable({int(i): int(y) for i, y in zip(ids, labels)})


def random_instance(rng, n_max=64, ties=False):
    """Random scores and labels with both classes present."""
    n = int(rng.integers(2, n_max + 1))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    y = rng.permutation(y)
    if ties:
        scores = rng.integers(0, max(2, n // 4), size=n) / max(2, n // 4)
    else:
        scores = rng.random(n)
    return scores, y


@pytest.fixture
def rng():
    return np.random.default_rng(20201210)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, str] = {}


def record_criterion(key, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'}  {key}: {detail}"
    ACCEPTANCE[key] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1])):
            terminalreporter.write_line(ACCEPTANCE[key])
