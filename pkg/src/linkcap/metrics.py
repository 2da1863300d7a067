"""
Global performance measure g, its expectation over (lambda, q), and the edge-removal sweep.
"""

import concurrent.futures
import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, stats
from tqdm import tqdm

from .allocation import allocate
from .errors import InvalidInputError, InvalidParameterError
from .graph import (
    Topology,
    complete_graph,
    edge_betweenness,
    edge_label,
    graph_stats,
    is_connected,
    rank_edges,
    remove_random_edge,
)
from .pmf import TrafficConfig, TruncationPolicy, edge_load_pmf, edge_load_pmfs, pmf_stats
from .routing import RoutingTable, build_routing_table
from .schemas import CurvePoint, GlobalMeasure, HistogramBin, StdPoint, SweepRecord
from .simulator import FrameTrace, SimConfig, derive_seed, run_simulation

logger = logging.getLogger(__name__)

# C·n_frames 곱의 반올림 오차 (상대, 몇 ulp)
_C_RELATIVE_SLACK = 4 * np.finfo(float).eps

GFunction = Callable[[float, float], float]
LambdaDistribution = Union[Any, Mapping[int, float]]
QDensity = Union[Any, Callable[[np.ndarray], np.ndarray]]


# =============================================================================
# 단일 추적 지표
# =============================================================================


def congestion_free_histogram(trace: FrameTrace, bin_width: float = 0.1) -> List[HistogramBin]:
    """
    간선별 혼잡 없는 프레임 비율의 정규화 히스토그램.

    구간은 [0, w), [w, 2w), ..., 마지막 구간은 1.0 을 포함합니다.
    """
    if not 0.0 < bin_width <= 1.0:
        raise InvalidParameterError(f"bin_width must lie in (0, 1], got {bin_width}")
    if not trace.edges:
        raise InvalidInputError("histogram needs at least one edge")

    fractions = trace.congestion_free_fraction()
    n_bins = max(1, int(round(1.0 / bin_width)))
    if not math.isclose(n_bins * bin_width, 1.0, rel_tol=1e-9):
        n_bins = int(math.ceil(1.0 / bin_width))

    idx = np.clip(np.floor(fractions / bin_width + 1e-9).astype(np.int64), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    mass = counts / counts.sum()
    return [
        HistogramBin(lower=b * bin_width, upper=min(1.0, (b + 1) * bin_width), mass=float(mass[b]))
        for b in range(n_bins)
    ]


def global_measure(trace: FrameTrace, C: float, **context: Any) -> GlobalMeasure:
    """
    전역 지표 g: 혼잡 없는 프레임 비율이 C 이상인 간선의 비율.

    Args:
        trace: 시뮬레이션 추적
        C: 전역 기준
        **context: lam, q, c, topology_id 등 기록용 값

    Returns:
        GlobalMeasure: g 와 실행 정보
    """
    if trace.n_frames == 0:
        raise InvalidInputError("trace has no frames")
    counts = trace.congestion_free_counts()
    required = C * trace.n_frames * (1.0 - _C_RELATIVE_SLACK)
    g = float(np.mean(counts >= required)) if counts.size else 1.0
    return GlobalMeasure(g=g, C=C, n_frames=trace.n_frames, edge_count=len(trace.edges), **context)


def g_curve(trace: FrameTrace, C_grid: Optional[Sequence[float]] = None) -> List[CurvePoint]:
    """C 격자 (기본 0.00..1.00, 0.05 간격) 에 대한 g-vs-C 곡선."""
    grid = np.round(np.linspace(0.0, 1.0, 21), 2) if C_grid is None else C_grid
    return [CurvePoint(C=float(C), g=global_measure(trace, float(C)).g) for C in grid]


# =============================================================================
# (lambda, q) 기대값
# =============================================================================


def _lambda_support(p_lambda: LambdaDistribution, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """잔여 꼬리 질량이 tol 미만이 되는 지점까지의 (lambda 값, 확률)."""
    if isinstance(p_lambda, Mapping):
        items = sorted((int(k), float(v)) for k, v in p_lambda.items())
        if not items:
            raise InvalidParameterError("p_lambda is empty")
        if any(k < 0 or v < 0 or not math.isfinite(v) for k, v in items):
            raise InvalidParameterError("p_lambda needs non-negative integer support and non-negative weights")
        total = sum(v for _, v in items)
        if not math.isclose(total, 1.0, abs_tol=1e-6):
            raise InvalidParameterError(f"p_lambda weights must sum to 1, got {total:.6f}")
        ks, ps, cum = [], [], 0.0
        for k, v in items:
            ks.append(k)
            ps.append(v)
            cum += v
            if 1.0 - cum < tol:
                break
        return np.array(ks, dtype=float), np.array(ps)

    if not (hasattr(p_lambda, "pmf") and hasattr(p_lambda, "sf")):
        raise InvalidParameterError("p_lambda must be a mapping or a frozen discrete scipy distribution")
    k_max = 0
    while float(p_lambda.sf(k_max)) >= tol:
        k_max += 1
    ks = np.arange(k_max + 1)
    ps = np.asarray(p_lambda.pmf(ks), dtype=float)
    if not np.all(np.isfinite(ps)) or (ps < 0).any():
        raise InvalidParameterError("p_lambda produced invalid probabilities")
    return ks.astype(float), ps


def _q_density(p_q: QDensity, qs: np.ndarray) -> np.ndarray:
    density_fn = p_q.pdf if hasattr(p_q, "pdf") else p_q
    density = np.asarray(density_fn(qs), dtype=float)
    if density.shape != qs.shape or not np.all(np.isfinite(density)) or (density < 0).any():
        raise InvalidParameterError("p_q must be a non-negative finite density on [0, 1]")
    area = float(integrate.trapezoid(density, qs))
    if area <= 0:
        raise InvalidParameterError("p_q integrates to zero on [0, 1]")
    if abs(area - 1.0) > 1e-2:
        logger.warning(f"⚠️  p_q 적분값이 1에서 벗어났습니다: {area:.4f}")
    return density


def expected_global_measure(
    g_fn: GFunction,
    p_lambda: Optional[LambdaDistribution] = None,
    p_q: Optional[QDensity] = None,
    tol: float = 1e-3,
    q_points: int = 11,
    workers: int = 1,
) -> float:
    """
    E_G(g) = Σ_lambda p(lambda) ∫ p(q) g(lambda, q) dq.

    lambda 는 잔여 꼬리 질량이 tol 미만이 될 때까지 더하고, q 적분은 [0, 1] 의
    등간격 q_points 점 사다리꼴 공식입니다.

    Args:
        g_fn: (lambda, q) → g
        p_lambda: 이산 분포 (기본 Poisson(4)) 또는 {lambda: 확률}
        p_q: 밀도 (기본 Uniform(0, 1))
        tol: lambda 꼬리 허용 질량
        q_points: q 격자 점 수 (>= 2)
        workers: 격자 평가 병렬 워커 수

    Returns:
        float: 기대 전역 지표
    """
    if not 0.0 < tol < 1.0:
        raise InvalidParameterError(f"tol must lie in (0, 1), got {tol}")
    if q_points < 2:
        raise InvalidParameterError(f"q_points must be >= 2, got {q_points}")

    lams, p_lams = _lambda_support(stats.poisson(4.0) if p_lambda is None else p_lambda, tol)
    qs = np.linspace(0.0, 1.0, q_points)
    density = _q_density(stats.uniform(0.0, 1.0) if p_q is None else p_q, qs)

    grid = [(i, j) for i in range(len(lams)) for j in range(len(qs))]
    values = np.zeros((len(lams), len(qs)))
    if workers > 1 and len(grid) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            future_to_cell = {executor.submit(g_fn, float(lams[i]), float(qs[j])): (i, j) for i, j in grid}
            for future in concurrent.futures.as_completed(future_to_cell):
                values[future_to_cell[future]] = future.result()
    else:
        for i, j in grid:
            values[i, j] = g_fn(float(lams[i]), float(qs[j]))

    inner = integrate.trapezoid(values * density[None, :], qs, axis=1)
    return float(np.clip(np.dot(p_lams, inner), 0.0, 1.0))


def evaluate_global_measure(
    g: Topology,
    table: RoutingTable,
    lam: float,
    q: float,
    c: float,
    C: float,
    n_frames: int,
    seed: Union[int, np.random.SeedSequence],
    policy: Optional[TruncationPolicy] = None,
) -> float:
    """
    단일 (lambda, q) 파이프라인: pmf → 용량 할당 → 시뮬레이션 → g.

    lambda = 0 또는 q = 0 이면 모든 부하와 용량이 0 이므로 g = 1 입니다.
    """
    if lam == 0 or q == 0:
        return 1.0
    traffic = TrafficConfig.homogeneous(g.n, lam, q)
    pmfs = edge_load_pmfs(table, traffic, policy)
    plan = allocate(pmfs, c, provenance={"lambda": lam, "q": q})
    trace = run_simulation(g, table, traffic, plan, SimConfig(n_frames=n_frames, seed=derive_seed(seed)))
    return global_measure(trace, C).g


# =============================================================================
# 간선 제거 스윕
# =============================================================================


def topology_sweep(
    n: int,
    c: float,
    C: float,
    p_lambda: Optional[LambdaDistribution] = None,
    p_q: Optional[QDensity] = None,
    n_frames: int = 90,
    seed: int = 0,
    *,
    sequence: int = 0,
    policy: Optional[TruncationPolicy] = None,
    tol: float = 1e-3,
    q_points: int = 11,
    workers: int = 1,
    max_steps: Optional[int] = None,
    show_progress: bool = False,
) -> List[SweepRecord]:
    """
    완전 그래프 K_n 에서 연결이 끊어질 때까지 임의 간선을 하나씩 제거하며
    스냅샷마다 그래프 통계와 E_G(g) 를 기록합니다.

    연결이 끊기는 그래프는 기록하지 않습니다. 제거 순서 스트림과 각 (lambda, q)
    평가 스트림은 모두 seed 와 (sequence, step) 에서 유도됩니다.

    Returns:
        List[SweepRecord]: 단계 순서의 기록
    """
    removal_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(sequence, 0))))
    g = complete_graph(n)
    records: List[SweepRecord] = []
    step = 0
    total_steps = n * (n - 1) // 2 - (n - 1) + 1
    if max_steps is not None:
        total_steps = min(total_steps, max_steps + 1)

    logger.info(f"🚀 스윕 시작: K_{n}, 시퀀스 {sequence}, seed {seed}")
    with tqdm(total=total_steps, desc=f"sweep[{sequence}]", unit="graph", disable=not show_progress) as pbar:
        while is_connected(g):
            table = build_routing_table(g, workers=workers)

            def g_fn(lam: float, q: float, _g: Topology = g, _table: RoutingTable = table, _step: int = step) -> float:
                key = (sequence, 1, _step, int(lam), int(round(q * (q_points - 1))))
                return evaluate_global_measure(
                    _g, _table, lam, q, c, C, n_frames, np.random.SeedSequence(seed, spawn_key=key), policy
                )

            expected = expected_global_measure(g_fn, p_lambda, p_q, tol=tol, q_points=q_points, workers=workers)
            removed = g.metadata.get("removed_edge")
            records.append(
                SweepRecord(
                    sequence=sequence,
                    step=step,
                    topology_id=g.fingerprint(),
                    removed_edge=edge_label(tuple(removed)) if removed else None,
                    stats=graph_stats(g),
                    edges=[list(e) for e in g.edge_list],
                    expected_g=expected,
                )
            )
            pbar.update(1)
            logger.debug(f"스텝 {step}: |E|={g.edge_count}, E_G(g)={expected:.4f}")

            if max_steps is not None and step >= max_steps:
                break
            g = remove_random_edge(g, removal_rng)
            step += 1

    logger.info(f"✅ 스윕 완료: {len(records)}개 스냅샷")
    return records


def best_record(records: Sequence[SweepRecord]) -> SweepRecord:
    """E_G(g) 최대 기록 (동점이면 더 이른 단계)."""
    if not records:
        raise InvalidInputError("no sweep records")
    return max(records, key=lambda r: (r.expected_g, -r.sequence, -r.step))


def max_centrality_std_curve(
    table: RoutingTable,
    lam: float,
    q_grid: Sequence[float],
    policy: Optional[TruncationPolicy] = None,
) -> List[StdPoint]:
    """
    최대 중심성 간선의 부하 pmf 표준편차를 q 격자에서 계산합니다.

    표준편차가 q 에 대해 단조 감소하지 않으면 경고만 남깁니다.
    """
    g = table.topology
    if g.edge_count == 0:
        raise InvalidInputError("std curve needs at least one edge")
    top = rank_edges(edge_betweenness(g))[0]

    points: List[StdPoint] = []
    for q in q_grid:
        pmf = edge_load_pmf(top, table, TrafficConfig.homogeneous(g.n, lam, float(q)), policy)
        mean, std = pmf_stats(pmf)
        points.append(StdPoint(q=float(q), edge=edge_label(top), mean=mean, std=std))

    ordered = sorted(points, key=lambda p: p.q)
    if any(b.std > a.std + 1e-9 for a, b in zip(ordered, ordered[1:])):
        logger.warning(f"⚠️  간선 {edge_label(top)} 의 표준편차가 q 에 대해 단조 감소하지 않습니다")
    return points


def sweep_summary(records: Sequence[SweepRecord]) -> Dict[str, Any]:
    """최고 기록의 요약 문서."""
    best = best_record(records)
    return {
        "sequence": best.sequence,
        "step": best.step,
        "topology_id": best.topology_id,
        "expected_g": best.expected_g,
        "stats": best.stats.model_dump(),
        "n_records": len(records),
    }
