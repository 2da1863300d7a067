"""
All-shortest-path routing fractions f_ij^mn and uniform shortest-path sampling.
"""

import concurrent.futures
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .graph import Edge, SeedLike, Topology, as_generator, normalize_edge

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
Path = Tuple[int, ...]

# 경로 수가 이 값 이상이면 int64 대신 파이썬 정수(object 배열)로 보관 (곱이 2**62 미만)
_INT64_SAFE = 2**31


@dataclass(frozen=True, eq=False)
class EdgeRoutes:
    """간선 ij를 지나는 순서쌍 집합 A_ij와 각 쌍의 분율 f_ij^mn."""

    edge: Edge
    pairs: np.ndarray  # (k, 2) int, 사전식 정렬
    fractions: np.ndarray  # (k,) float, 0 < f <= 1

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    def as_dict(self) -> Dict[Pair, float]:
        return {(int(m), int(n)): float(f) for (m, n), f in zip(self.pairs, self.fractions)}


@dataclass(frozen=True, eq=False)
class RoutingTable:
    """
    최단경로 라우팅 테이블.

    dist[m, n]은 홉 거리, sigma[m, n]은 m→n 최단경로 수 L 입니다.
    routes[edge]는 A_ij (분율이 0인 쌍은 없음) 입니다.
    """

    topology: Topology
    dist: np.ndarray
    sigma: np.ndarray
    adjacency: Tuple[Tuple[int, ...], ...]
    routes: Dict[Edge, EdgeRoutes]
    _lookup: Dict[Edge, Dict[Pair, float]] = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.topology.n

    def distance(self, m: int, n: int) -> int:
        return int(self.dist[m, n])

    def path_count(self, m: int, n: int) -> int:
        """m→n 최단경로 수 L."""
        return int(self.sigma[m, n])

    def contributing_pairs(self, edge: Edge) -> EdgeRoutes:
        """간선의 A_ij. 토폴로지에 없는 간선이면 InvalidInputError."""
        key = normalize_edge(*edge)
        if key not in self.routes:
            raise InvalidInputError(f"edge {key} is not in the routed topology")
        return self.routes[key]

    def fraction(self, edge: Edge, m: int, n: int) -> float:
        """f_ij^mn (A_ij에 없으면 0)."""
        key = normalize_edge(*edge)
        if key not in self._lookup:
            self._lookup[key] = self.contributing_pairs(key).as_dict()
        return self._lookup[key].get((m, n), 0.0)

    def edge_load_share(self, edge: Edge) -> float:
        """Σ_(m,n) f_ij^mn. 순서쌍 규약의 간선 매개 중심성과 같습니다."""
        return float(self.contributing_pairs(edge).fractions.sum())

    def predecessors(self, m: int, node: int) -> List[int]:
        """m에서 출발하는 최단경로 DAG에서 node의 선행 노드들."""
        d = self.dist[m, node]
        return [p for p in self.adjacency[node] if self.dist[m, p] == d - 1]

    def shortest_paths(self, m: int, n: int, limit: int = 256) -> Optional[List[Path]]:
        """
        m→n 최단경로를 모두 나열합니다. L > limit 이면 None을 반환합니다.

        Returns:
            Optional[List[Path]]: 사전식으로 정렬된 노드 시퀀스 목록
        """
        _check_pair(self.n, m, n)
        if self.path_count(m, n) > limit:
            return None

        paths: List[Path] = []

        def walk(node: int, suffix: Tuple[int, ...]) -> None:
            if node == m:
                paths.append((m,) + suffix)
                return
            for p in self.predecessors(m, node):
                walk(p, (node,) + suffix)

        walk(n, ())
        return sorted(paths)

    def to_json(self) -> Dict[str, Any]:
        """간선별 {m, n, f} 목록 (점검/골든 테스트용)."""
        return {
            "n": self.n,
            "edges": [
                {
                    "edge": list(edge),
                    "pairs": [
                        {"m": int(m), "n": int(n), "f": float(f)}
                        for (m, n), f in zip(routes.pairs, routes.fractions)
                    ],
                }
                for edge, routes in sorted(self.routes.items())
            ],
        }


def _check_pair(n_nodes: int, m: int, n: int) -> None:
    if m == n:
        raise InvalidParameterError(f"source and destination must differ, got m = n = {m}")
    if not (0 <= m < n_nodes and 0 <= n < n_nodes):
        raise InvalidParameterError(f"pair ({m}, {n}) references a node outside 0..{n_nodes - 1}")


def _bfs_counts(adjacency: Sequence[Sequence[int]], source: int) -> Tuple[List[int], List[int]]:
    """단일 출발점 BFS: (거리, 최단경로 수). 도달 불가 노드는 거리 -1."""
    n = len(adjacency)
    dist = [-1] * n
    sigma = [0] * n
    dist[source] = 0
    sigma[source] = 1
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
            if dist[w] == dist[v] + 1:
                sigma[w] += sigma[v]
    return dist, sigma


def build_routing_table(g: Topology, workers: int = 1) -> RoutingTable:
    """
    최단경로 라우팅 테이블을 만듭니다.

    출발점별 BFS로 거리와 경로 수를 구한 뒤, 간선 (u, v)를 지나는 m→n 최단경로 수를
    sigma[m,u]·sigma[v,n] (dist[m,u] + 1 + dist[v,n] = dist[m,n] 일 때) 와 반대
    방향 항의 합으로 계산합니다. 경로를 명시적으로 나열하지 않습니다.

    Args:
        g: 연결된 토폴로지
        workers: 출발점별 BFS 병렬 워커 수

    Returns:
        RoutingTable: 불변 라우팅 테이블
    """
    adjacency = tuple(tuple(a) for a in g.adjacency())
    sources = range(g.n)

    if workers > 1 and g.n > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(lambda s: _bfs_counts(adjacency, s), sources))
    else:
        rows = [_bfs_counts(adjacency, s) for s in sources]

    dist = np.array([r[0] for r in rows], dtype=np.int64)
    if (dist < 0).any():
        raise InvalidInputError("routing requires a connected topology")

    max_count = max(max(r[1]) for r in rows)
    dtype = np.int64 if max_count < _INT64_SAFE else object
    sigma = np.array([r[1] for r in rows], dtype=dtype)

    routes: Dict[Edge, EdgeRoutes] = {}
    for u, v in g.edge_list:
        through = _paths_through(dist, sigma, u, v) + _paths_through(dist, sigma, v, u)
        ms, ns = np.nonzero(through > 0)
        counts = through[ms, ns]
        totals = sigma[ms, ns]
        fractions = np.array([int(c) / int(t) for c, t in zip(counts, totals)], dtype=float)
        routes[(u, v)] = EdgeRoutes(
            edge=(u, v),
            pairs=np.column_stack([ms, ns]).astype(np.int64).reshape(-1, 2),
            fractions=fractions,
        )

    logger.debug(f"라우팅 테이블 생성: n={g.n}, |E|={g.edge_count}, 최대 경로 수={max_count}")
    return RoutingTable(topology=g, dist=dist, sigma=sigma, adjacency=adjacency, routes=routes)


def _paths_through(dist: np.ndarray, sigma: np.ndarray, u: int, v: int) -> np.ndarray:
    """방향 u→v로 간선을 지나는 최단경로 수 행렬 (m, n)."""
    on_path = dist[:, u][:, None] + 1 + dist[v, :][None, :] == dist
    counts = np.outer(sigma[:, u], sigma[v, :])
    return np.where(on_path, counts, 0)


def sample_shortest_path(table: RoutingTable, m: int, n: int, rng: SeedLike = None) -> Path:
    """
    m→n 최단경로 중 하나를 균등하게 뽑습니다.

    도착점에서 출발점 방향으로 최단경로 DAG를 거꾸로 걸으며, 각 선행 노드 p를
    sigma[m, p] 에 비례하는 확률로 선택합니다. 이 규칙은 L개 경로 각각을 정확히 1/L
    확률로 고릅니다.
    """
    _check_pair(table.n, m, n)
    generator = as_generator(rng)

    node = n
    reversed_path = [n]
    while node != m:
        preds = table.predecessors(m, node)
        if len(preds) == 1:
            node = preds[0]
        else:
            weights = np.array([float(table.sigma[m, p]) for p in preds])
            node = preds[int(generator.choice(len(preds), p=weights / weights.sum()))]
        reversed_path.append(node)
    return tuple(reversed(reversed_path))


def path_edges(path: Sequence[int]) -> List[Edge]:
    """노드 시퀀스를 정규화된 간선 목록으로 변환합니다."""
    return [normalize_edge(a, b) for a, b in zip(path[:-1], path[1:])]
