from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from tanner_graph import (
    AlistParseError, GraphConstructionError, MatrixSpec, MatrixSpecError, TannerGraph,
    from_alist, generate_regular, load_alist, save_alist, to_alist, validate,
)

from conftest import SMALL_SPECS, regular_graph

FIG1_ALIST = "3 2\n2 3\n2 2 2\n3 3\n1 2\n1 2\n1 2\n1 2 3\n1 2 3\n"


class TestMatrixSpec:
    def test_degree_balance_is_enforced(self):
        # 4*2 = 8 VN sockets against 3*4 = 12 CN sockets
        with pytest.raises(MatrixSpecError, match="degree balance"):
            MatrixSpec(2, 4, 4, 3).check()

    def test_degrees_below_two_rejected(self):
        with pytest.raises(MatrixSpecError):
            MatrixSpec(1, 2, 4, 2).check()

    def test_square_matrix_rejected(self):
        with pytest.raises(MatrixSpecError, match="wide"):
            MatrixSpec(3, 3, 6, 6).check()

    def test_unknown_field_mode(self):
        with pytest.raises(MatrixSpecError):
            MatrixSpec(2, 3, 3, 2, field_mode='complex').check()


class TestGenerateRegular:
    def test_fig1_is_complete_bipartite(self, fig1_graph):
        graph = generate_regular(MatrixSpec(2, 3, 3, 2))
        assert graph == fig1_graph
        np.testing.assert_array_equal(graph.to_dense(), np.ones((2, 3)))

    def test_a1_degrees(self, a1_graph):
        assert a1_graph.num_edges == 2100
        assert (a1_graph.vn_degrees == 3).all()
        assert (a1_graph.cn_degrees == 7).all()
        assert a1_graph.vn_degrees.sum() == a1_graph.cn_degrees.sum() == 2100
        assert validate(a1_graph) == []

    @pytest.mark.parametrize('spec', SMALL_SPECS, ids=lambda s: s.label)
    def test_same_seed_same_graph(self, spec):
        first = regular_graph(spec)
        second = generate_regular(first.spec)
        assert first.edges == second.edges

    def test_different_seeds_differ(self):
        a = regular_graph(MatrixSpec(3, 6, 60, 30, seed=1))
        b = regular_graph(MatrixSpec(3, 6, 60, 30, seed=50))
        assert a != b

    @pytest.mark.parametrize('spec', SMALL_SPECS, ids=lambda s: s.label)
    def test_small_specs_are_simple_and_regular(self, spec):
        graph = regular_graph(spec)
        assert validate(graph) == []
        assert graph.is_binary

    def test_simple_graphs_sampled_uniformly(self):
        counts = Counter()
        for seed in range(20000):
            graph = generate_regular(MatrixSpec(2, 3, 6, 4, seed=seed))
            counts[graph.to_dense().tobytes()] += 1
        assert len(counts) > 1500
        assert chisquare(list(counts.values())).pvalue > 1e-3

    def test_real_weights_in_unit_interval(self):
        graph = regular_graph(MatrixSpec(3, 6, 60, 30, seed=3, field_mode='nonneg-real'))
        assert not graph.is_binary
        assert (graph.weight > 0).all() and (graph.weight <= 1).all()

    def test_balance_violation_raises_before_generation(self):
        with pytest.raises(MatrixSpecError):
            generate_regular(MatrixSpec(2, 4, 4, 3))

    def test_exhausted_attempts_report_seed(self):
        # VN degree 3 with only two CNs
        spec = MatrixSpec(3, 6, 4, 2, seed=11)
        with pytest.raises(GraphConstructionError) as info:
            generate_regular(spec, max_attempts=5)
        assert info.value.seed == 11
        assert info.value.attempts == 5


class TestGraphQueries:
    def test_adjacency_views(self, fig1_graph):
        assert fig1_graph.num_edges == 6
        np.testing.assert_array_equal(fig1_graph.vn_neighbors(1), [0, 1])
        np.testing.assert_array_equal(fig1_graph.cn_neighbors(0), [0, 1, 2])
        assert fig1_graph.edge_id(1, 2) == 5
        with pytest.raises(KeyError):
            TannerGraph.from_dense([[1, 0, 1], [0, 1, 1]]).edge_id(0, 1)

    def test_arrays_read_only(self, fig1_graph):
        with pytest.raises(ValueError):
            fig1_graph.weight[0] = 2.0

    def test_dense_round_trip(self):
        dense = np.array([[0.5, 0.0, 1.0, 0.0], [0.0, 2.0, 1.0, 1.0]])
        graph = TannerGraph.from_dense(dense)
        np.testing.assert_array_equal(graph.to_dense(), dense)
        np.testing.assert_array_equal(graph.csr.toarray(), dense)

    def test_negative_dense_entries_rejected(self):
        with pytest.raises(ValueError):
            TannerGraph.from_dense([[1, -1, 0], [0, 1, 1]])


class TestAlist:
    def test_fig1_header(self, fig1_graph):
        text = to_alist(fig1_graph)
        lines = text.splitlines()
        assert lines[0] == "3 2"
        assert lines[1] == "2 3"
        assert text == FIG1_ALIST

    def test_a1_round_trip(self, a1_graph):
        assert from_alist(to_alist(a1_graph)) == a1_graph

    def test_weights_round_trip(self):
        graph = regular_graph(MatrixSpec(3, 6, 12, 6, seed=5, field_mode='nonneg-real'))
        text = to_alist(graph)
        assert "WEIGHTS" in text
        assert from_alist(text) == graph

    def test_file_round_trip(self, tmp_path, fig1_graph):
        path = tmp_path / "fig1.alist"
        save_alist(fig1_graph, path)
        assert load_alist(path) == fig1_graph

    def test_zero_padding_accepted(self):
        irregular = "3 2\n2 3\n1 2 2\n3 2\n1 0\n1 2\n1 2\n1 2 3\n2 3 0\n"
        assert from_alist(irregular).num_edges == 5

    def test_degree_mismatch_reports_line(self):
        bad = FIG1_ALIST.replace("1 2\n1 2\n1 2\n", "1 2 1\n1 2\n1 2\n", 1)
        with pytest.raises(AlistParseError) as info:
            from_alist(bad)
        assert info.value.line == 5
        assert "line 5" in str(info.value)

    def test_out_of_range_index(self):
        bad = FIG1_ALIST.replace("1 2 3\n1 2 3\n", "1 2 4\n1 2 3\n")
        with pytest.raises(AlistParseError, match="out of range"):
            from_alist(bad)

    def test_row_column_disagreement(self):
        bad = "3 2\n2 3\n1 2 2\n2 3\n1\n1 2\n1 2\n2 3\n1 2 3\n"
        with pytest.raises(AlistParseError):
            from_alist(bad)

    def test_truncated_file(self):
        with pytest.raises(AlistParseError, match="unexpected end"):
            from_alist("3 2\n2 3\n2 2 2\n")

    def test_non_integer_token(self):
        with pytest.raises(AlistParseError) as info:
            from_alist("3 two\n")
        assert info.value.line == 1


class TestValidate:
    def test_valid_fig1(self, fig1_graph):
        assert validate(fig1_graph) == []

    def test_parallel_edge(self):
        graph = TannerGraph(3, 2, [(0, 0, 1.0), (0, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0)])
        assert any("parallel edge" in d for d in validate(graph))

    def test_zero_weight(self):
        graph = TannerGraph(3, 2, [(0, 0, 0.0), (0, 1, 1.0), (1, 2, 1.0)])
        assert any("non-positive weight" in d for d in validate(graph))

    def test_spec_regularity(self, fig1_graph):
        graph = TannerGraph.from_dense([[1, 1, 0], [0, 1, 1]], spec=MatrixSpec(2, 3, 3, 2))
        problems = validate(graph)
        assert any("VN 0 has degree 1" in d for d in problems)
        assert any("CN 0 has degree 2" in d for d in problems)
        assert validate(fig1_graph.with_spec(MatrixSpec(2, 3, 3, 2))) == []

    def test_tall_matrix(self):
        assert any("not wide" in d for d in validate(TannerGraph.from_dense(np.ones((3, 3)))))
