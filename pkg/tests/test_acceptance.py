"""Desk-scale Monte Carlo runs on a fresh (3,7) 300 x 700 matrix. Run with `pytest -m slow`."""
import pytest

from bench import SweepConfig, run_sweep
from tanner_graph import MatrixSpec, generate_regular
from utils.analytics import SweepAnalytics

pytestmark = pytest.mark.slow

A1_SPARSITIES = (0.06, 0.10, 0.14)


@pytest.fixture(scope='module')
def a1_sweep(a1_graph, tmp_path_factory):
    config = SweepConfig(matrix_spec=a1_graph.spec, sparsities=A1_SPARSITIES, trials=2000,
                         l_max=50, seed=0, n_jobs=-1,
                         output_dir=str(tmp_path_factory.mktemp('a1')))
    return run_sweep(config, a1_graph)


def test_recovery_containment(a1_graph, tmp_path):
    config = SweepConfig(matrix_spec=a1_graph.spec, sparsities=A1_SPARSITIES, trials=3334,
                         seed=101, n_jobs=-1, output_dir=str(tmp_path))
    stats = run_sweep(config, a1_graph)
    assert stats.containment_violations.sum() == 0


def test_complexity_reduction_trend(a1_sweep):
    reduction = a1_sweep.complexity_reduction
    assert 26 <= reduction[0.06] <= 46
    assert 18 <= reduction[0.10] <= 39
    assert 0 <= reduction[0.14] <= 15
    assert reduction[0.06] > reduction[0.10] > reduction[0.14]


def test_iteration_savings(a1_sweep):
    assert a1_sweep.iteration_savings[0.06] >= 25


def test_pcr_ordering_and_shape(a1_sweep):
    analytics = SweepAnalytics(a1_sweep.summary)
    assert analytics.check_pcr_ordering() == []
    assert analytics.check_pcr_monotone('fipa') == []
    assert analytics.check_pcr_monotone('sipa') == []


def test_fer_dominance_on_2_3_matrix(tmp_path):
    graph = generate_regular(MatrixSpec(2, 3, 150, 100, seed=1))
    config = SweepConfig(matrix_spec=graph.spec, sparsities=(0.02, 0.05, 0.08), trials=5000,
                         seed=3, n_jobs=-1, output_dir=str(tmp_path))
    summary = run_sweep(config, graph).summary.set_index(['variant', 'sparsity'])
    for sparsity in config.sparsities:
        fld, seq = summary.loc[('fipa', sparsity)], summary.loc[('sipa', sparsity)]
        assert seq['fer'] <= fld['fer'] + fld['pcr_half_width']
