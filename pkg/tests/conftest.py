import os
import sys
from dataclasses import replace

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from signals import generate_sparse  # noqa: E402
from tanner_graph import GraphConstructionError, MatrixSpec, TannerGraph, generate_regular  # noqa: E402

# small regular specs that satisfy n*gamma = m*rho with m < n
SMALL_SPECS = [
    MatrixSpec(2, 3, 6, 4),
    MatrixSpec(2, 4, 8, 4),
    MatrixSpec(3, 6, 12, 6),
    MatrixSpec(3, 7, 14, 6),
]


def regular_graph(spec, tries=20):
    """generate_regular, stepping to the next seed when one exhausts its attempts"""
    for offset in range(tries):
        try:
            return generate_regular(replace(spec, seed=spec.seed + offset))
        except GraphConstructionError:
            continue
    raise GraphConstructionError(spec.seed, tries)


@pytest.fixture
def fig1_graph():
    """Both CNs adjacent to all three VNs: the only simple (2,3)-regular 2 x 3 graph"""
    return TannerGraph.from_dense(np.ones((2, 3)))


@pytest.fixture(scope='session')
def a1_graph():
    return regular_graph(MatrixSpec(3, 7, 700, 300, seed=1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_instances(count, seed=0, mode='binary', max_sparsity=0.25):
    """(graph, x) pairs cycling through SMALL_SPECS with fresh matrix seeds"""
    rng = np.random.default_rng(seed)
    for i in range(count):
        base = SMALL_SPECS[i % len(SMALL_SPECS)]
        field_mode = 'binary' if mode == 'binary' else 'nonneg-real'
        spec = replace(base, seed=seed * 10007 + i, field_mode=field_mode)
        graph = regular_graph(spec)
        k = int(rng.integers(0, int(max_sparsity * spec.n) + 1))
        yield graph, generate_sparse(spec.n, k, mode, rng)


@pytest.fixture(autouse=True)
def matrix_cache(tmp_path, monkeypatch):
    """Keep generated matrices and results out of the working tree"""
    monkeypatch.setenv('IPA_MATRIX_CACHE', str(tmp_path / 'matrices'))
    monkeypatch.delenv('IPA_OUTPUT_DIR', raising=False)
    return tmp_path / 'matrices'
