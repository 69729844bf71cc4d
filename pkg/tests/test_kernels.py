"""The compiled and numpy backends must agree bit for bit."""

import numpy as np
import pytest

from rankblend import _pykernels
from rankblend._backend import BACKEND, kernels

from conftest import random_instance

compiled = pytest.importorskip("rankblend._kernels")


def test_selected_backend_is_compiled_when_built():
    assert BACKEND == "cython"
    assert kernels is compiled


def test_auroc_agrees(rng):
    for _ in range(2000):
        scores, y = random_instance(rng, 120, ties=bool(rng.integers(2)))
        assert compiled.auroc(scores, y) == _pykernels.auroc(scores, y)


def test_auroc_single_class_is_nan():
    assert np.isnan(compiled.auroc([0.1, 0.2], [1, 1]))
    assert np.isnan(_pykernels.auroc([0.1, 0.2], [0, 0]))


def test_midranks_agree(rng):
    for _ in range(1000):
        scores, _ = random_instance(rng, 120, ties=bool(rng.integers(2)))
        assert np.array_equal(compiled.midranks(scores), _pykernels.midranks(scores))
    assert compiled.midranks(np.array([])).size == 0
    assert compiled.midranks([0.3]).tolist() == _pykernels.midranks([0.3]).tolist() == [0.5]


@pytest.mark.parametrize("clip", [True, False])
def test_mixture_agrees(rng, clip):
    for _ in range(300):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 200))
        matrix = rng.random((m, n))
        weights = rng.dirichlet(np.ones(m))
        assert np.array_equal(compiled.mixture(matrix, weights, clip), _pykernels.mixture(matrix, weights, clip))
        y = (rng.random(n) < 0.5).astype(np.uint8)
        a = compiled.mixture_auroc(matrix, weights, y, clip)
        b = _pykernels.mixture_auroc(matrix, weights, y, clip)
        assert (np.isnan(a) and np.isnan(b)) or a == b


def test_mixture_clips_rounding_overshoot():
    matrix = np.ones((3, 4))
    weights = np.array([0.3333333333333334, 0.3333333333333334, 0.3333333333333334])
    assert compiled.mixture(matrix, weights, True).max() <= 1.0
    assert _pykernels.mixture(matrix, weights, True).max() <= 1.0
