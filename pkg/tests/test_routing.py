"""
Tests for routing fractions, path enumeration and uniform path sampling.
"""

from collections import Counter

import numpy as np
import pytest

from linkcap.errors import InvalidInputError, InvalidParameterError
from linkcap.graph import Topology, edge_betweenness
from linkcap.routing import build_routing_table, path_edges, sample_shortest_path


class TestFractions:
    def test_path_graph_middle_edge(self, path4_table):
        routes = path4_table.contributing_pairs((1, 2))
        assert len(routes) == 8
        assert np.all(routes.fractions == 1.0)
        assert path4_table.fraction((1, 2), 0, 3) == 1.0
        assert path4_table.fraction((1, 2), 0, 1) == 0.0

    def test_cycle_opposite_pairs_split(self, cycle4_table):
        assert cycle4_table.path_count(0, 2) == 2
        assert cycle4_table.fraction((0, 1), 0, 2) == pytest.approx(0.5)
        assert cycle4_table.fraction((0, 1), 1, 3) == pytest.approx(0.5)
        assert cycle4_table.fraction((0, 1), 0, 1) == 1.0

    def test_fractions_in_unit_interval(self, ba30_table):
        for routes in ba30_table.routes.values():
            assert np.all(routes.fractions > 0)
            assert np.all(routes.fractions <= 1.0 + 1e-12)

    def test_edge_load_share_matches_betweenness(self, ba30, ba30_table):
        b = edge_betweenness(ba30)
        for edge in ba30.edge_list:
            assert ba30_table.edge_load_share(edge) == pytest.approx(b[edge])

    def test_pair_fractions_sum_to_distance(self, ba30, ba30_table):
        """한 순서쌍의 분율 합은 홉 거리"""
        totals = np.zeros((ba30.n, ba30.n))
        for routes in ba30_table.routes.values():
            for (m, n), f in zip(routes.pairs, routes.fractions):
                totals[m, n] += f
        off = ~np.eye(ba30.n, dtype=bool)
        np.testing.assert_allclose(totals[off], ba30_table.dist[off])

    def test_unknown_edge(self, path4_table):
        with pytest.raises(InvalidInputError):
            path4_table.contributing_pairs((0, 3))

    def test_disconnected(self):
        with pytest.raises(InvalidInputError):
            build_routing_table(Topology.from_edges(4, [(0, 1), (2, 3)]))

    def test_parallel_build_matches_serial(self, ba30, ba30_table):
        parallel = build_routing_table(ba30, workers=4)
        assert parallel.to_json() == ba30_table.to_json()


class TestPaths:
    def test_enumeration_is_sorted(self, cycle4_table):
        assert cycle4_table.shortest_paths(0, 2) == [(0, 1, 2), (0, 3, 2)]

    def test_enumeration_limit(self, cycle4_table):
        assert cycle4_table.shortest_paths(0, 2, limit=1) is None

    def test_same_endpoints_rejected(self, cycle4_table):
        with pytest.raises(InvalidParameterError):
            sample_shortest_path(cycle4_table, 2, 2, rng=0)

    def test_sampled_path_is_shortest(self, ba30_table):
        rng = np.random.default_rng(4)
        for m, n in [(0, 29), (5, 17), (12, 3)]:
            path = sample_shortest_path(ba30_table, m, n, rng)
            assert path[0] == m and path[-1] == n
            assert len(path) - 1 == ba30_table.distance(m, n)
            assert all(ba30_table.topology.has_edge(*e) for e in path_edges(path))

    def test_sampling_is_uniform(self, cycle4_table):
        rng = np.random.default_rng(99)
        counts = Counter(sample_shortest_path(cycle4_table, 0, 2, rng) for _ in range(4000))
        assert set(counts) == {(0, 1, 2), (0, 3, 2)}
        assert counts[(0, 1, 2)] / 4000 == pytest.approx(0.5, abs=0.04)

    def test_sampling_is_uniform_on_grid(self):
        """3x3 격자 모서리-모서리: 6개 경로, 각 1/6"""
        edges = []
        for r in range(3):
            for c in range(3):
                v = 3 * r + c
                if c < 2:
                    edges.append((v, v + 1))
                if r < 2:
                    edges.append((v, v + 3))
        table = build_routing_table(Topology.from_edges(9, edges))
        assert table.path_count(0, 8) == 6
        rng = np.random.default_rng(7)
        counts = Counter(sample_shortest_path(table, 0, 8, rng) for _ in range(6000))
        assert len(counts) == 6
        for c in counts.values():
            assert c / 6000 == pytest.approx(1 / 6, abs=0.03)
