"""
Frame-based Monte Carlo simulator of per-edge loads under a capacity plan.
"""

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from .allocation import CapacityPlan
from .config import settings
from .errors import InvalidInputError
from .graph import Edge, Topology, edge_label, normalize_edge
from .pmf import Pmf, TrafficConfig
from .routing import RoutingTable, path_edges, sample_shortest_path

logger = logging.getLogger(__name__)


class SimConfig(BaseModel):
    """시뮬레이션 실행 설정"""

    n_frames: int = Field(..., ge=1, description="프레임 수")
    seed: int = Field(..., ge=0, description="루트 시드 (필수)")
    block_size: int = Field(default_factory=lambda: settings.simulation_block_size, ge=1, description="블록당 프레임 수")
    workers: int = Field(default=1, ge=1, description="블록 병렬 워커 수")
    path_limit: int = Field(default_factory=lambda: settings.path_enumeration_limit, ge=1, description="경로 나열 한계")
    show_progress: bool = Field(default=False, description="tqdm 진행 표시")


@dataclass(frozen=True, eq=False)
class FrameTrace:
    """
    프레임 × 간선 부하 행렬과 용량.

    congested[t, e] 는 loads[t, e] > capacity[e] 입니다.
    """

    edges: List[Edge]
    loads: np.ndarray  # (n_frames, |E|) int64
    capacity: np.ndarray  # (|E|,) int64
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return int(self.loads.shape[0])

    @property
    def congested(self) -> np.ndarray:
        return self.loads > self.capacity[None, :]

    def edge_index(self, edge: Edge) -> int:
        key = normalize_edge(*edge)
        try:
            return self.edges.index(key)
        except ValueError as e:
            raise InvalidInputError(f"edge {key} is not in the trace") from e

    def congestion_free_counts(self) -> np.ndarray:
        """간선별 혼잡 없는 프레임 수."""
        return self.n_frames - self.congested.sum(axis=0)

    def congestion_free_fraction(self) -> np.ndarray:
        """간선별 혼잡 없는 프레임 비율."""
        if self.n_frames == 0:
            raise InvalidInputError("trace has no frames")
        return self.congestion_free_counts() / self.n_frames

    def summary(self) -> pd.DataFrame:
        """간선별 요약: 관측 프레임 수, 용량, 평균/최대 부하, 혼잡 없는 비율."""
        return pd.DataFrame(
            {
                "edge": [edge_label(e) for e in self.edges],
                "frames_observed": np.full(len(self.edges), self.n_frames, dtype=np.int64),
                "capacity": self.capacity,
                "mean_load": self.loads.mean(axis=0) if self.n_frames else np.zeros(len(self.edges)),
                "max_load": self.loads.max(axis=0) if self.n_frames else np.zeros(len(self.edges), dtype=np.int64),
                "congestion_free_fraction": self.congestion_free_fraction(),
            }
        )

    def loads_frame(self) -> pd.DataFrame:
        """프레임별 부하 (열 = 간선 라벨)."""
        frame = pd.DataFrame(self.loads, columns=[edge_label(e) for e in self.edges])
        frame.insert(0, "frame", np.arange(self.n_frames))
        return frame


# =============================================================================
# 쌍별 경로 준비
# =============================================================================


@dataclass(frozen=True, eq=False)
class _PairRoute:
    """
    활성 순서쌍 하나의 경로 정보.

    incidence 가 있으면 (L, U) 0/1 행렬 (U = 경로들이 지나는 간선 합집합),
    없으면 경로 수가 한계를 넘은 경우로 프레임마다 DAG 샘플링합니다.
    """

    m: int
    n: int
    lam: float
    q: float
    n_paths: int
    edge_idx: Optional[np.ndarray]
    incidence: Optional[np.ndarray]


def _prepare_routes(table: RoutingTable, traffic: TrafficConfig, edges: List[Edge], limit: int) -> List[_PairRoute]:
    index = {e: i for i, e in enumerate(edges)}
    routes: List[_PairRoute] = []
    for m, n in traffic.active_pairs():
        lam, q = traffic.pair(m, n)
        paths = table.shortest_paths(m, n, limit=limit)
        if paths is None:
            routes.append(_PairRoute(m, n, lam, q, table.path_count(m, n), None, None))
            continue
        per_path = [[index[e] for e in path_edges(p)] for p in paths]
        union = sorted({i for idx in per_path for i in idx})
        column = {e: c for c, e in enumerate(union)}
        incidence = np.zeros((len(paths), len(union)), dtype=np.int64)
        for r, idx in enumerate(per_path):
            incidence[r, [column[i] for i in idx]] = 1
        routes.append(_PairRoute(m, n, lam, q, len(paths), np.array(union, dtype=np.int64), incidence))
    return routes


def _simulate_block(
    routes: Sequence[_PairRoute],
    table: RoutingTable,
    n_edges: int,
    n_frames: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    프레임 블록 하나를 시뮬레이션합니다.

    쌍마다 (활성 여부, 패킷 수, 경로 번호) 를 블록 전체 프레임에 대해 벡터로 뽑습니다.
    한 쌍의 패킷 묶음은 한 프레임에서 같은 경로를 탑니다.
    """
    loads = np.zeros((n_frames, n_edges), dtype=np.int64)
    index = {e: i for i, e in enumerate(table.topology.edge_list)}
    for route in routes:
        active = rng.random(n_frames) < route.q
        counts = rng.poisson(route.lam, n_frames) * active
        if route.incidence is not None:
            choice = rng.integers(route.n_paths, size=n_frames)
            loads[:, route.edge_idx] += counts[:, None] * route.incidence[choice]
        else:
            for t in np.nonzero(counts)[0]:
                path = sample_shortest_path(table, route.m, route.n, rng)
                loads[t, [index[e] for e in path_edges(path)]] += counts[t]
    return loads


def derive_seed(seed: Union[int, np.random.SeedSequence], *key: int) -> int:
    """루트 seed 와 정수 키에서 하위 실행용 63비트 seed 를 유도합니다."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed, spawn_key=key)
    return int(root.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _check_inputs(g: Topology, table: RoutingTable, traffic: TrafficConfig) -> None:
    if table.topology.edges != g.edges or table.n != g.n:
        raise InvalidInputError("routing table was built for a different topology")
    if traffic.n != g.n:
        raise InvalidInputError(f"traffic is for {traffic.n} nodes, topology has {g.n}")


# =============================================================================
# 공개 연산
# =============================================================================


def run_frame(
    g: Topology,
    table: RoutingTable,
    traffic: TrafficConfig,
    rng: Union[int, np.random.Generator],
) -> Dict[Edge, int]:
    """
    프레임 하나의 간선별 부하를 뽑습니다.

    Args:
        g: 토폴로지
        table: 같은 토폴로지의 라우팅 테이블
        traffic: 순서쌍별 트래픽
        rng: numpy Generator 또는 정수 시드

    Returns:
        Dict[Edge, int]: 간선별 패킷 수
    """
    _check_inputs(g, table, traffic)
    generator = rng if isinstance(rng, np.random.Generator) else np.random.Generator(np.random.Philox(rng))
    edges = g.edge_list
    routes = _prepare_routes(table, traffic, edges, settings.path_enumeration_limit)
    loads = _simulate_block(routes, table, len(edges), 1, generator)[0]
    return {e: int(v) for e, v in zip(edges, loads)}


def run_simulation(
    g: Topology,
    table: RoutingTable,
    traffic: TrafficConfig,
    plan: CapacityPlan,
    cfg: SimConfig,
) -> FrameTrace:
    """
    n_frames 개 프레임을 시뮬레이션하고 부하/혼잡 추적을 반환합니다.

    프레임은 block_size 단위 블록으로 나뉘고, 블록마다 SeedSequence(seed).spawn 으로
    얻은 독립 Philox 스트림을 씁니다. 결과는 블록 번호 순으로 이어 붙이므로 워커 수와
    무관하게 같은 seed 는 같은 추적을 만듭니다.

    Raises:
        InvalidInputError: 계획의 간선 집합이 토폴로지와 다를 때
    """
    _check_inputs(g, table, traffic)
    edges = g.edge_list
    if set(plan.capacity) != set(edges):
        missing = sorted(set(edges) ^ set(plan.capacity))
        raise InvalidInputError(f"capacity plan does not match topology edges: {[edge_label(e) for e in missing[:5]]}")

    routes = _prepare_routes(table, traffic, edges, cfg.path_limit)
    capacity = np.array([plan.capacity[e] for e in edges], dtype=np.int64)

    n_blocks = math.ceil(cfg.n_frames / cfg.block_size)
    children = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    sizes = [min(cfg.block_size, cfg.n_frames - b * cfg.block_size) for b in range(n_blocks)]

    def run_block(b: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(children[b]))
        return _simulate_block(routes, table, len(edges), sizes[b], rng)

    blocks: List[Optional[np.ndarray]] = [None] * n_blocks
    with tqdm(total=n_blocks, desc="simulate", unit="block", disable=not cfg.show_progress) as pbar:
        if cfg.workers > 1 and n_blocks > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as executor:
                future_to_block = {executor.submit(run_block, b): b for b in range(n_blocks)}
                for future in concurrent.futures.as_completed(future_to_block):
                    blocks[future_to_block[future]] = future.result()
                    pbar.update(1)
        else:
            for b in range(n_blocks):
                blocks[b] = run_block(b)
                pbar.update(1)

    loads = np.vstack(blocks) if edges else np.zeros((cfg.n_frames, 0), dtype=np.int64)
    logger.debug(f"시뮬레이션 완료: {cfg.n_frames} 프레임, {n_blocks} 블록, 경로 샘플링 쌍 {sum(r.incidence is None for r in routes)}개")
    return FrameTrace(
        edges=edges,
        loads=loads,
        capacity=capacity,
        metadata={
            "rng": "Philox",
            "seed": cfg.seed,
            "block_size": cfg.block_size,
            "n_frames": cfg.n_frames,
            "path_choice": "per-batch",
        },
    )


def empirical_load_pmf(trace: FrameTrace, edge: Edge) -> Pmf:
    """추적에서 간선 하나의 부하 경험 pmf."""
    if trace.n_frames == 0:
        raise InvalidInputError("trace has no frames")
    column = trace.loads[:, trace.edge_index(edge)]
    mass = np.bincount(column).astype(float) / trace.n_frames
    return Pmf(mass=mass, label=edge_label(normalize_edge(*edge)))
