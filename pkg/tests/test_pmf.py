"""
Tests for Phi/Omega, vector length selection, convolution and edge load pmfs.
"""

import json

import numpy as np
import pytest
from scipy import stats

from linkcap.errors import InvalidInputError, InvalidParameterError
from linkcap.pmf import (
    Pmf,
    TrafficConfig,
    TruncationPolicy,
    choose_Q,
    convolve_direct,
    edge_load_pmf,
    edge_load_pmfs,
    omega,
    omega_vector,
    phi,
    phi_vector,
    pmf_stats,
    poisson_pmf,
    total_variation,
)


class TestPhiOmega:
    def test_poisson_sums_to_one(self):
        assert sum(poisson_pmf(4.0, k) for k in range(201)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("lam,q,f", [(4.0, 1.0, 1.0), (4.0, 0.5, 0.3), (0.5, 0.25, 0.9), (20.0, 1.0, 0.01)])
    def test_omega_zero_floor(self, lam, q, f):
        """Omega(k=0) >= 1 - f"""
        assert omega(lam, q, f, 0) >= 1.0 - f

    @pytest.mark.parametrize("lam,q", [(4.0, 1.0), (4.0, 0.5), (0.3, 0.25), (12.0, 0.0)])
    def test_phi_zero_matches_simplified_form(self, lam, q):
        assert phi(lam, q, 0) == pytest.approx(1 - q + q * poisson_pmf(lam, 0))

    def test_phi_vector_sums_to_one(self):
        assert phi_vector(4.0, 0.6, 80).sum() == pytest.approx(1.0)

    def test_q_zero_is_point_mass(self):
        assert phi(4.0, 0.0, 0) == 1.0
        assert phi(4.0, 0.0, 3) == 0.0

    def test_f_zero_is_point_mass(self):
        vec = omega_vector(4.0, 1.0, 0.0, 10)
        assert vec[0] == 1.0 and vec[1:].sum() == 0.0

    def test_omega_matches_vector(self):
        vec = omega_vector(4.0, 0.75, 0.5, 20)
        assert [omega(4.0, 0.75, 0.5, k) for k in range(20)] == pytest.approx(list(vec))

    def test_omega_vector_is_read_only(self):
        with pytest.raises(ValueError):
            omega_vector(4.0, 0.75, 0.5, 20)[0] = 0.0

    @pytest.mark.parametrize("args", [(-1.0, 0.5, 0.5, 0), (4.0, 1.5, 0.5, 0), (4.0, 0.5, 1.2, 0), (4.0, 0.5, 0.5, -1)])
    def test_domain_errors(self, args):
        with pytest.raises(InvalidParameterError):
            omega(*args)


class TestChooseQ:
    def test_lambda_zero(self):
        assert choose_Q(0.0, 1.0, 1.0) == 1

    @pytest.mark.parametrize("lam,q,f", [(4.0, 1.0, 1.0), (4.0, 0.25, 0.1), (0.2, 1.0, 0.5), (30.0, 0.5, 0.3)])
    def test_tail_rule(self, lam, q, f):
        policy = TruncationPolicy(epsilon=0.001)
        Q = choose_Q(lam, q, f, policy)
        r = int(np.floor(lam + 0.5))
        target = policy.epsilon * omega(lam, q, f, r)
        assert Q >= r + 1
        assert omega(lam, q, f, Q - 1) <= target
        assert all(omega(lam, q, f, k) > target for k in range(r, Q - 1))

    def test_min_length(self):
        policy = TruncationPolicy(min_length=60)
        assert choose_Q(4.0, 1.0, 1.0, policy) == 60
        assert omega(4.0, 1.0, 1.0, 59) <= policy.epsilon * omega(4.0, 1.0, 1.0, 4)

    def test_smaller_epsilon_longer_vector(self):
        assert choose_Q(4.0, 1.0, 1.0, TruncationPolicy(epsilon=1e-6)) > choose_Q(4.0, 1.0, 1.0)

    def test_policy_validation(self):
        with pytest.raises(InvalidParameterError):
            TruncationPolicy(epsilon=0.0)
        with pytest.raises(InvalidParameterError):
            TruncationPolicy(method="magic")


class TestPmfStats:
    def test_point_mass(self):
        assert pmf_stats(Pmf.point_mass(5)) == pytest.approx((5.0, 0.0))

    def test_two_points(self):
        assert pmf_stats(Pmf(np.array([0.5, 0.5]))) == pytest.approx((0.5, 0.5))

    def test_truncated_poisson(self):
        mean, std = pmf_stats(Pmf(stats.poisson.pmf(np.arange(60), 4.0)))
        assert mean == pytest.approx(4.0, abs=1e-3)
        assert std == pytest.approx(2.0, abs=1e-3)

    def test_negative_mass_rejected(self):
        with pytest.raises(InvalidInputError):
            Pmf(np.array([0.5, -0.1, 0.6]))

    def test_total_variation(self):
        a = Pmf(np.array([0.5, 0.5]))
        assert total_variation(a, a) == 0.0
        assert total_variation(a, Pmf.point_mass(2)) == pytest.approx(1.0)


def test_convolve_direct_sums_independent_variables():
    a = np.array([0.5, 0.5])
    out = convolve_direct([a, a, a])
    np.testing.assert_allclose(out, [0.125, 0.375, 0.375, 0.125])


def test_convolution_order_does_not_matter(ba30_table):
    """쌍별 Omega 벡터를 역순으로 합성곱해도 Pi 는 1e-12 이내로 같음"""
    policy = TruncationPolicy()
    routes = ba30_table.contributing_pairs(ba30_table.topology.edge_list[0])
    vectors = [omega_vector(4.0, 0.6, float(f), choose_Q(4.0, 0.6, float(f), policy)) for f in routes.fractions]
    forward = convolve_direct(vectors)
    backward = convolve_direct(reversed(vectors))
    assert np.max(np.abs(forward - backward)) <= 1e-12


class TestEdgeLoadPmf:
    def test_path_graph_end_edge_is_poisson_sum(self, path4_table):
        """끝 간선: f=1 인 6개 쌍 → Poisson(24) (잘림 제외)"""
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        pmf = edge_load_pmf((0, 1), path4_table, traffic, TruncationPolicy(min_length=60))
        expected = stats.poisson.pmf(np.arange(len(pmf)), 24.0)
        assert total_variation(pmf.mass, expected) < 1e-6

    def test_length_is_sum_of_vector_lengths(self, cycle4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 0.5)
        policy = TruncationPolicy()
        routes = cycle4_table.contributing_pairs((0, 1))
        expected = 1 + sum(choose_Q(4.0, 0.5, float(f), policy) - 1 for f in routes.fractions)
        assert len(edge_load_pmf((0, 1), cycle4_table, traffic, policy)) == expected

    def test_mean_matches_routing_share(self, ba30, ba30_table):
        traffic = TrafficConfig.homogeneous(30, 4.0, 0.75)
        edge = ba30.edge_list[0]
        pmf = edge_load_pmf(edge, ba30_table, traffic)
        mean, _ = pmf_stats(pmf)
        assert mean == pytest.approx(4.0 * 0.75 * ba30_table.edge_load_share(edge), rel=1e-3)

    def test_direct_and_fft_agree(self, ba30, ba30_table):
        traffic = TrafficConfig.homogeneous(30, 4.0, 0.5)
        edge = ba30.edge_list[3]
        direct = edge_load_pmf(edge, ba30_table, traffic, TruncationPolicy(method="direct"))
        fft = edge_load_pmf(edge, ba30_table, traffic, TruncationPolicy(method="fft"))
        assert len(direct) == len(fft)
        np.testing.assert_allclose(direct.mass, fft.mass, atol=1e-10)

    def test_silent_traffic_is_point_mass(self, path4_table):
        pmf = edge_load_pmf((1, 2), path4_table, TrafficConfig.homogeneous(4, 0.0, 1.0))
        assert len(pmf) == 1 and pmf.mass[0] == 1.0

    def test_normalization_error_below_one_percent(self, ba30_table):
        """BA(30,4), lambda=4, epsilon=0.001: 모든 간선 Σ Pi >= 0.99"""
        for q in (1.0, 0.25):
            pmfs = edge_load_pmfs(ba30_table, TrafficConfig.homogeneous(30, 4.0, q), TruncationPolicy())
            assert min(p.total for p in pmfs.values()) >= 0.99

    def test_parallel_matches_serial(self, ba30_table):
        traffic = TrafficConfig.homogeneous(30, 4.0, 0.5)
        edges = ba30_table.topology.edge_list[:8]
        serial = edge_load_pmfs(ba30_table, traffic, edges=edges)
        parallel = edge_load_pmfs(ba30_table, traffic, edges=edges, workers=4)
        assert list(serial) == list(parallel)
        for edge in edges:
            np.testing.assert_array_equal(serial[edge].mass, parallel[edge].mass)


class TestTrafficConfig:
    def test_homogeneous_validation(self):
        with pytest.raises(InvalidParameterError):
            TrafficConfig.homogeneous(4, 4.0, 1.5)
        with pytest.raises(InvalidParameterError):
            TrafficConfig.homogeneous(4, -1.0, 0.5)

    def test_matrix_file(self, tmp_path, path4_table):
        lam = np.zeros((4, 4))
        lam[0, 3] = 2.0
        q = np.ones((4, 4))
        path = tmp_path / "traffic.json"
        path.write_text(json.dumps({"lambda": lam.tolist(), "q": q.tolist()}))
        traffic = TrafficConfig.from_file(path, 4)
        assert traffic.active_pairs() == [(0, 3)]
        pmf = edge_load_pmf((1, 2), path4_table, traffic, TruncationPolicy(min_length=40))
        assert pmf_stats(pmf)[0] == pytest.approx(2.0, abs=1e-6)

    def test_matrix_file_shape(self, tmp_path):
        path = tmp_path / "traffic.json"
        path.write_text(json.dumps({"lambda": [[0, 1], [1, 0]], "q": [[0, 1], [1, 0]]}))
        with pytest.raises(InvalidInputError):
            TrafficConfig.from_file(path, 3)
