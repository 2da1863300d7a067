"""
Tests for the frame simulator and its agreement with the analytic load pmf.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from linkcap.allocation import CapacityPlan, allocate
from linkcap.errors import InvalidInputError
from linkcap.graph import Topology, generate_barabasi_albert
from linkcap.pmf import TrafficConfig, TruncationPolicy, edge_load_pmfs, total_variation
from linkcap.routing import build_routing_table
from linkcap.simulator import SimConfig, derive_seed, empirical_load_pmf, run_frame, run_simulation


def _unlimited(g: Topology) -> CapacityPlan:
    return CapacityPlan.unlimited(g.edge_list)


class TestRunSimulation:
    def test_same_seed_same_trace(self, cycle4, cycle4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 0.6)
        cfg = SimConfig(n_frames=500, seed=42, block_size=64)
        a = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), cfg)
        b = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), cfg)
        np.testing.assert_array_equal(a.loads, b.loads)

    def test_workers_do_not_change_trace(self, ba30, ba30_table):
        traffic = TrafficConfig.homogeneous(30, 4.0, 0.5)
        serial = run_simulation(ba30, ba30_table, traffic, _unlimited(ba30), SimConfig(n_frames=300, seed=3, block_size=50))
        threaded = run_simulation(
            ba30, ba30_table, traffic, _unlimited(ba30), SimConfig(n_frames=300, seed=3, block_size=50, workers=4)
        )
        np.testing.assert_array_equal(serial.loads, threaded.loads)

    def test_different_seed_different_trace(self, cycle4, cycle4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        a = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), SimConfig(n_frames=200, seed=1))
        b = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), SimConfig(n_frames=200, seed=2))
        assert not np.array_equal(a.loads, b.loads)

    def test_trace_shape_and_metadata(self, path4, path4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        trace = run_simulation(path4, path4_table, traffic, _unlimited(path4), SimConfig(n_frames=130, seed=0, block_size=64))
        assert trace.loads.shape == (130, 3)
        assert trace.loads.dtype == np.int64
        assert trace.metadata["rng"] == "Philox"
        assert trace.metadata["path_choice"] == "per-batch"
        assert not trace.congested.any()

    def test_end_edge_mean_load(self, path4, path4_table):
        """끝 간선은 6개 쌍, 프레임당 평균 24 패킷"""
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        trace = run_simulation(path4, path4_table, traffic, _unlimited(path4), SimConfig(n_frames=2000, seed=5))
        assert trace.loads[:, 0].mean() == pytest.approx(24.0, abs=0.5)

    def test_silent_traffic(self, cycle4, cycle4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 0.0)
        trace = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), SimConfig(n_frames=50, seed=9))
        assert trace.loads.sum() == 0

    def test_congestion_against_plan(self, path4, path4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        plan = CapacityPlan(capacity={e: 0 for e in path4.edge_list}, criterion=0.5)
        trace = run_simulation(path4, path4_table, traffic, plan, SimConfig(n_frames=100, seed=1))
        np.testing.assert_array_equal(trace.congested, trace.loads > 0)
        summary = trace.summary()
        assert list(summary.columns[:2]) == ["edge", "frames_observed"]
        assert (summary["frames_observed"] == 100).all()
        assert summary["congestion_free_fraction"].between(0, 1).all()

    def test_zero_capacity_congestion_matches_pmf(self, path4, path4_table):
        """용량 0 이면 혼잡 프레임 비율 ≈ 1 - Pi(0)"""
        traffic = TrafficConfig.homogeneous(4, 4.0, 0.1)
        pmfs = edge_load_pmfs(path4_table, traffic)
        plan = CapacityPlan(capacity={e: 0 for e in path4.edge_list}, criterion=0.5)
        trace = run_simulation(path4, path4_table, traffic, plan, SimConfig(n_frames=4000, seed=21))
        congested = trace.congested.mean(axis=0)
        for i, edge in enumerate(trace.edges):
            assert congested[i] == pytest.approx(1.0 - pmfs[edge].cmf()[0], abs=0.03)

    def test_path_sampling_fallback_matches_enumeration(self, cycle4, cycle4_table):
        """경로 나열 한계를 넘는 쌍은 DAG 샘플링으로 같은 평균 부하"""
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        plan = _unlimited(cycle4)
        enumerated = run_simulation(cycle4, cycle4_table, traffic, plan, SimConfig(n_frames=4000, seed=8))
        sampled = run_simulation(cycle4, cycle4_table, traffic, plan, SimConfig(n_frames=4000, seed=8, path_limit=1))
        assert enumerated.loads.mean(axis=0) == pytest.approx([16.0] * 4, abs=0.6)
        assert sampled.loads.mean(axis=0) == pytest.approx([16.0] * 4, abs=0.6)

    def test_plan_must_match_topology(self, path4, path4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        plan = CapacityPlan.unlimited([(0, 1), (1, 2)])
        with pytest.raises(InvalidInputError):
            run_simulation(path4, path4_table, traffic, plan, SimConfig(n_frames=10, seed=1))

    def test_table_must_match_topology(self, path4, cycle4_table):
        traffic = TrafficConfig.homogeneous(4, 4.0, 1.0)
        with pytest.raises(InvalidInputError):
            run_simulation(path4, cycle4_table, traffic, _unlimited(path4), SimConfig(n_frames=10, seed=1))

    def test_zero_frames_rejected(self):
        with pytest.raises(ValidationError):
            SimConfig(n_frames=0, seed=1)


class TestRunFrame:
    def test_loads_per_edge(self, cycle4, cycle4_table):
        loads = run_frame(cycle4, cycle4_table, TrafficConfig.homogeneous(4, 4.0, 1.0), np.random.default_rng(0))
        assert sorted(loads) == cycle4.edge_list
        assert all(isinstance(v, int) and v >= 0 for v in loads.values())

    def test_single_edge_mean_load(self):
        """간선 하나, 두 순서쌍, q=1, lambda=4 → 프레임당 평균 8"""
        g = Topology.from_edges(2, [(0, 1)])
        table = build_routing_table(g)
        traffic = TrafficConfig.homogeneous(2, 4.0, 1.0)
        rng = np.random.Generator(np.random.Philox(17))
        loads = [run_frame(g, table, traffic, rng)[(0, 1)] for _ in range(10_000)]
        assert np.mean(loads) == pytest.approx(8.0, abs=0.1)


def test_batch_takes_one_path(cycle4, cycle4_table):
    """순서쌍 (0, 2) 만 활성: 한 프레임의 묶음 전체가 두 경로 중 하나로만 감"""
    lam = np.zeros((4, 4))
    lam[0, 2] = 4.0
    traffic = TrafficConfig(lam=lam, q=np.ones((4, 4)))
    trace = run_simulation(cycle4, cycle4_table, traffic, _unlimited(cycle4), SimConfig(n_frames=20_000, seed=4))
    via_1 = trace.loads[:, trace.edge_index((0, 1))]
    via_3 = trace.loads[:, trace.edge_index((0, 3))]
    np.testing.assert_array_equal(via_1, trace.loads[:, trace.edge_index((1, 2))])
    assert ((via_1 == 0) | (via_3 == 0)).all()
    expected = 0.5 * (1.0 - np.exp(-4.0))
    assert (via_1 > 0).mean() == pytest.approx(expected, abs=0.02)


def test_derive_seed_is_stable():
    assert derive_seed(7, 0, 1) == derive_seed(7, 0, 1)
    assert derive_seed(7, 0, 1) != derive_seed(7, 1, 0)
    assert 0 <= derive_seed(7) < 2**63


def test_empirical_pmf_sums_to_one(path4, path4_table):
    traffic = TrafficConfig.homogeneous(4, 4.0, 0.5)
    trace = run_simulation(path4, path4_table, traffic, _unlimited(path4), SimConfig(n_frames=300, seed=2))
    pmf = empirical_load_pmf(trace, (1, 2))
    assert pmf.total == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        empirical_load_pmf(trace, (0, 3))


ORACLE_GRAPHS = {
    "path4": Topology.from_edges(4, [(0, 1), (1, 2), (2, 3)]),
    "cycle4": Topology.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
    "ba8": generate_barabasi_albert(8, 2, seed=8),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(ORACLE_GRAPHS))
@pytest.mark.parametrize("q", [1.0, 0.5])
def test_analytic_pmf_matches_simulation(name, q):
    """10^5 프레임 경험 분포와 해석 pmf 의 총변동 거리 <= 0.02"""
    g = ORACLE_GRAPHS[name]
    table = build_routing_table(g)
    traffic = TrafficConfig.homogeneous(g.n, 4.0, q)
    pmfs = edge_load_pmfs(table, traffic, TruncationPolicy())
    trace = run_simulation(g, table, traffic, _unlimited(g), SimConfig(n_frames=100_000, seed=1234))
    for edge in g.edge_list:
        assert total_variation(pmfs[edge], empirical_load_pmf(trace, edge)) <= 0.02


@pytest.mark.slow
def test_local_criterion_is_met_on_average(ba30, ba30_table):
    """c = 0.85 계획: 간선 평균 혼잡 없는 비율이 [0.85, 0.92] 근처"""
    traffic = TrafficConfig.homogeneous(30, 4.0, 1.0)
    pmfs = edge_load_pmfs(ba30_table, traffic, TruncationPolicy())
    plan = allocate(pmfs, 0.85)
    analytic = np.mean([pmfs[e].cmf()[plan.capacity[e]] for e in ba30.edge_list])
    assert 0.85 <= analytic <= 0.92

    trace = run_simulation(ba30, ba30_table, traffic, plan, SimConfig(n_frames=10_000, seed=77))
    empirical = float(trace.congestion_free_fraction().mean())
    assert empirical == pytest.approx(analytic, abs=0.01)
