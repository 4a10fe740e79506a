import numpy as np
import pandas as pd
import pytest

from bench import (
    SUMMARY_COLUMNS, SweepConfig, SweepConfigError, emit_results, load_results, run_sweep,
    trial_streams,
)
from complexity import TABLE_ROWS
from matrix_manager import MatrixManager
from tanner_graph import MatrixSpec, generate_regular, save_alist

from conftest import regular_graph
from utils.analytics import SweepAnalytics

SPEC = MatrixSpec(3, 6, 120, 60, seed=3)


@pytest.fixture(scope='module')
def graph():
    return regular_graph(SPEC)


def _config(tmp_path, **changes):
    settings = dict(matrix_spec=SPEC, sparsities=(0.05, 0.10, 0.20), trials=40, l_max=30,
                    seed=7, output_dir=str(tmp_path))
    settings.update(changes)
    return SweepConfig(**settings)


@pytest.fixture(scope='module')
def stats(graph, tmp_path_factory):
    return run_sweep(_config(tmp_path_factory.mktemp('sweep')), graph)


class TestSweepConfig:
    def test_defaults(self):
        config = SweepConfig(matrix_path='a1.alist')
        assert (config.trials, config.l_max) == (2000, 50)
        assert config.variants == ('fipa', 'sipa')

    def test_points_round_to_k(self):
        config = SweepConfig(matrix_path='a1.alist')
        assert config.points(700) == [(0.06, 42), (0.10, 70), (0.14, 98)]
        assert SweepConfig(matrix_path='x', ks=(0, 3)).points(10) == [(0.0, 0), (0.3, 3)]

    @pytest.mark.parametrize('changes', [
        dict(trials=0), dict(l_max=0), dict(variants=('fipa', 'bp')), dict(mode='signed'),
        dict(matrix_spec=None), dict(sparsities=(), ks=None),
    ])
    def test_invalid(self, tmp_path, changes):
        with pytest.raises(SweepConfigError):
            _config(tmp_path, **changes).validate()

    def test_sparsity_above_one(self, tmp_path):
        with pytest.raises(SweepConfigError, match="outside"):
            _config(tmp_path, sparsities=(1.5,)).validate(n=120)

    def test_from_yaml(self, tmp_path):
        path = tmp_path / "sweep.yaml"
        path.write_text("gamma: 3\nrho: 7\nn: 700\nm: 300\nmatrix_seed: 1\n"
                        "sparsities: [0.06, 0.1]\ntrials: 10\nl_max: 20\n"
                        "cost_model: {o_add: 2}\n")
        config = SweepConfig.from_yaml(path)
        assert config.matrix_spec == MatrixSpec(3, 7, 700, 300, seed=1)
        assert config.sparsities == (0.06, 0.1)
        assert (config.trials, config.l_max, config.seed) == (10, 20, 0)
        assert config.cost_model.o_add == 2

    def test_yaml_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "sweep.yaml"
        path.write_text("trails: 10\n")
        with pytest.raises(ValueError, match="trails"):
            SweepConfig.from_yaml(path)


class TestTrialStreams:
    def test_independent_and_repeatable(self):
        a_signal, a_schedule = trial_streams(7, 0, 3)
        b_signal, b_schedule = trial_streams(7, 0, 3)
        assert a_signal.integers(1 << 30) == b_signal.integers(1 << 30)
        assert a_schedule.integers(1 << 30) == b_schedule.integers(1 << 30)
        other, _ = trial_streams(7, 0, 4)
        assert trial_streams(7, 0, 3)[0].random() != other.random()


class TestRunSweep:
    def test_zero_sparsity_always_recovered(self, graph, tmp_path):
        stats = run_sweep(_config(tmp_path, sparsities=(0.0,), trials=20), graph)
        assert (stats.summary['pcr'] == 1.0).all()
        assert (stats.summary['mean_iterations'] == 1.0).all()

    def test_summary_shape(self, stats):
        assert list(stats.summary.columns) == SUMMARY_COLUMNS
        assert len(stats.summary) == 6
        assert (stats.summary['trials'] == 40).all()
        np.testing.assert_allclose(stats.summary['pcr'] + stats.summary['fer'], 1.0)
        assert stats.summary['pcr'].between(0, 1).all()

    def test_paired_design(self, stats):
        digests = stats.trials.pivot_table(index=['point', 'trial'], columns='variant',
                                           values='signal_digest', aggfunc='first')
        assert (digests['fipa'] == digests['sipa']).all()

    def test_containment_holds(self, stats):
        assert (stats.containment_violations == 0).all()

    def test_sequential_needs_fewer_iterations(self, stats):
        assert (stats.iteration_savings >= 0).all()

    def test_iteration_savings_from_mean_iterations(self, stats):
        it = stats.summary.pivot(index='sparsity', columns='variant', values='mean_iterations')
        expected = 100.0 * (1.0 - it['sipa'] / it['fipa'])
        np.testing.assert_allclose(stats.iteration_savings.loc[expected.index].to_numpy(),
                                   expected.to_numpy())

    def test_complexity_columns(self, stats):
        table = stats.complexity_table()
        assert list(table.index) == TABLE_ROWS
        reduction = stats.complexity_reduction
        np.testing.assert_allclose(reduction.to_numpy(),
                                   table.loc['avg. % reduction of complexity'].to_numpy())

    def test_parallel_matches_serial(self, graph, tmp_path, stats):
        parallel = run_sweep(_config(tmp_path, n_jobs=2), graph)
        pd.testing.assert_frame_equal(parallel.summary, stats.summary)

    def test_single_variant(self, graph, tmp_path):
        stats = run_sweep(_config(tmp_path, variants=('sipa',), trials=10), graph)
        assert set(stats.summary['variant']) == {'sipa'}
        assert stats.summary['reduction_pct'].isna().all()
        with pytest.raises(ValueError):
            stats.complexity_table()

    def test_matrix_from_cache(self, tmp_path, matrix_cache):
        config = _config(tmp_path, matrix_spec=MatrixSpec(2, 4, 40, 20, seed=1),
                         sparsities=(0.05,), trials=5)
        stats = run_sweep(config)
        assert stats.matrix_label == config.matrix_spec.label
        assert (matrix_cache / f"{config.matrix_spec.label}.alist").exists()

    def test_matrix_from_path(self, graph, tmp_path):
        path = tmp_path / "a.alist"
        save_alist(graph, path)
        stats = run_sweep(_config(tmp_path, matrix_spec=None, matrix_path=str(path),
                                  sparsities=(0.05,), trials=5))
        assert stats.matrix_label == 'a'


class TestEmitResults:
    def test_files(self, stats, tmp_path):
        written = emit_results(stats, output_dir=tmp_path, plot=True)
        names = sorted(p.name for p in written)
        base = f"ipa_{stats.matrix_label}_seed7_lmax30"
        assert names == sorted([
            f"{base}.csv", f"{base}_complexity.csv", f"{base}.json",
            f"{base}_fipa_pcr.dat", f"{base}_sipa_pcr.dat", f"{base}_pcr.html",
        ])
        assert len(pd.read_csv(tmp_path / f"{base}.csv")) == 6

        complexity = pd.read_csv(tmp_path / f"{base}_complexity.csv", index_col=0)
        assert list(complexity.index) == TABLE_ROWS

        series = np.loadtxt(tmp_path / f"{base}_sipa_pcr.dat")
        np.testing.assert_allclose(series[:, 0], [0.05, 0.10, 0.20])

    def test_csv_reproducible(self, graph, stats, tmp_path):
        first = emit_results(stats, formats=('csv',), output_dir=tmp_path / 'a')[0]
        again = run_sweep(_config(tmp_path), graph)
        second = emit_results(again, formats=('csv',), output_dir=tmp_path / 'b')[0]
        assert first.read_bytes() == second.read_bytes()

    def test_json_round_trip(self, stats, tmp_path):
        path = next(p for p in emit_results(stats, formats=('json',), output_dir=tmp_path)
                    if p.suffix == '.json')
        payload, summary = load_results(path)
        assert payload['seed'] == 7 and payload['l_max'] == 30
        assert payload['config']['matrix_spec']['gamma'] == 3
        pd.testing.assert_frame_equal(summary, stats.summary, check_dtype=False)

    def test_unknown_format(self, stats, tmp_path):
        with pytest.raises(ValueError):
            emit_results(stats, formats=('xlsx',), output_dir=tmp_path)


class TestAnalytics:
    def test_checks_and_figure(self, stats):
        analytics = SweepAnalytics(stats.summary)
        assert list(analytics.pcr_series('fipa').index) == [0.05, 0.10, 0.20]
        assert analytics.check_pcr_ordering() == []
        fig = analytics.create_pcr_figure()
        assert {trace.name for trace in fig.data} == {'FIPA', 'SIPA'}

    def test_flags_rising_pcr(self):
        summary = pd.DataFrame({
            'variant': ['fipa'] * 3, 'sparsity': [0.1, 0.2, 0.3], 'pcr': [0.5, 0.9, 0.4],
            'pcr_half_width': [0.01] * 3, 'iteration_savings_pct': [np.nan] * 3,
            'reduction_pct': [np.nan] * 3,
        })
        assert SweepAnalytics(summary).check_pcr_monotone('fipa') == [(0.1, 0.2)]


class TestMatrixManager:
    def test_load_or_create_reuses_cache(self, tmp_path):
        manager = MatrixManager(str(tmp_path))
        spec = MatrixSpec(2, 4, 16, 8, seed=2)
        created = manager.load_or_create(spec)
        assert manager.load_or_create(spec) == created

    def test_corrupt_cache_is_regenerated(self, tmp_path):
        manager = MatrixManager(str(tmp_path))
        spec = MatrixSpec(2, 4, 16, 8, seed=2)
        with open(manager.cache_path(spec), 'w') as f:
            f.write("not an alist\n")
        assert manager.load_or_create(spec) == generate_regular(spec)

    def test_needs_spec_or_path(self, tmp_path):
        with pytest.raises(ValueError):
            MatrixManager(str(tmp_path)).load_or_create()
