"""
Undirected topology model, generators, edge removal, betweenness and graph files.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from .errors import InvalidInputError, InvalidParameterError, InvalidStateError
from .schemas import GraphStats

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def normalize_edge(i: int, j: int) -> Edge:
    """간선 {i, j}를 (작은 id, 큰 id) 튜플로 정규화합니다."""
    i, j = int(i), int(j)
    if i == j:
        raise InvalidInputError(f"self-loop is not allowed: ({i}, {j})")
    return (i, j) if i < j else (j, i)


def edge_label(edge: Edge) -> str:
    """간선 라벨 'i-j' (CSV 컬럼, 파일명용)."""
    return f"{edge[0]}-{edge[1]}"


def as_generator(seed: SeedLike) -> np.random.Generator:
    """seed/SeedSequence/Generator를 numpy Generator로 통일합니다."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Topology:
    """
    무방향 단순 그래프. 노드는 0..n-1 정수, 간선은 정규화된 (i, j), i < j.

    생성 후 불변이며, 변경 연산은 새 Topology를 반환합니다.
    """

    n: int
    edges: FrozenSet[Edge]
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParameterError(f"node count must be >= 1, got {self.n}")
        normalized = set()
        for i, j in self.edges:
            edge = normalize_edge(i, j)
            if not (0 <= edge[0] and edge[1] < self.n):
                raise InvalidInputError(f"edge {edge} references a node outside 0..{self.n - 1}")
            normalized.add(edge)
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]], **metadata: Any) -> "Topology":
        """간선 목록에서 Topology를 만듭니다 (중복 간선은 하나로 합쳐집니다)."""
        return cls(n=n, edges=frozenset(normalize_edge(i, j) for i, j in edges), metadata=dict(metadata))

    @property
    def nodes(self) -> range:
        return range(self.n)

    @property
    def edge_list(self) -> List[Edge]:
        """정렬된 간선 목록 (모든 결정적 반복의 기준 순서)."""
        return sorted(self.edges)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return normalize_edge(i, j) in self.edges

    def degrees(self) -> np.ndarray:
        """노드별 차수 배열."""
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> List[List[int]]:
        """정렬된 인접 리스트."""
        adj: List[List[int]] = [[] for _ in range(self.n)]
        for i, j in self.edge_list:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def without_edge(self, edge: Edge) -> "Topology":
        edge = normalize_edge(*edge)
        if edge not in self.edges:
            raise InvalidInputError(f"edge {edge} is not in the topology")
        return Topology(n=self.n, edges=self.edges - {edge}, metadata=dict(self.metadata))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edge_list)
        return graph

    def fingerprint(self) -> str:
        """스냅샷 식별자: 노드 수와 간선 수 기반의 짧은 문자열."""
        return f"n{self.n}-e{self.edge_count}"


# =============================================================================
# 생성기
# =============================================================================


def generate_barabasi_albert(n: int, m: int, seed: SeedLike = None) -> Topology:
    """
    Barabási–Albert 선호적 연결 그래프를 생성합니다.

    m개 노드의 완전 그래프(클리크)에서 시작하고, 이후 추가되는 각 노드는 현재 차수에
    비례하는 확률로 서로 다른 m개의 기존 노드에 연결됩니다. 간선 수는
    C(m, 2) + m·(n − m) 입니다. m = 1이면 시드 클리크가 노드 하나뿐이므로 노드 1은
    노드 0에 연결됩니다.

    Args:
        n: 전체 노드 수
        m: 새 노드가 만드는 간선 수 (최소 차수)
        seed: 난수 시드

    Returns:
        Topology: 연결된 BA 그래프
    """
    if m < 1 or n <= m:
        raise InvalidParameterError(f"barabasi_albert requires n > m >= 1, got n={n}, m={m}")

    rng = as_generator(seed)
    degree = np.zeros(n, dtype=np.int64)
    edges = set()

    # 시드 클리크: 0..m-1
    for i in range(m):
        for j in range(i + 1, m):
            edges.add((i, j))
            degree[i] += 1
            degree[j] += 1

    for new_node in range(m, n):
        weights = degree[:new_node].astype(float)
        total = weights.sum()
        if total == 0:
            # m = 1 인 첫 단계: 차수가 모두 0
            targets = np.arange(new_node)[:m]
        else:
            targets = rng.choice(new_node, size=m, replace=False, p=weights / total)
        for t in targets:
            edges.add(normalize_edge(new_node, int(t)))
            degree[new_node] += 1
            degree[int(t)] += 1

    logger.debug(f"BA 그래프 생성: n={n}, m={m}, |E|={len(edges)}")
    return Topology(n=n, edges=frozenset(edges), metadata={"generator": "barabasi_albert", "n": n, "m": m})


def complete_graph(n: int) -> Topology:
    """n개 노드의 완전 그래프 K_n을 생성합니다."""
    if n < 2:
        raise InvalidParameterError(f"complete_graph requires n >= 2, got {n}")
    edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n))
    return Topology(n=n, edges=edges, metadata={"generator": "complete", "n": n})


def remove_random_edge(g: Topology, rng: SeedLike = None) -> Topology:
    """
    균등하게 선택한 간선 하나를 제거합니다. 연결성 확인은 호출자의 몫입니다.

    제거된 간선은 반환 그래프의 metadata["removed_edge"]에 기록됩니다.
    """
    if g.edge_count == 0:
        raise InvalidStateError("cannot remove an edge from an edgeless topology")
    generator = as_generator(rng)
    edges = g.edge_list
    removed = edges[int(generator.integers(len(edges)))]
    result = g.without_edge(removed)
    result.metadata["removed_edge"] = list(removed)
    return result


# =============================================================================
# 구조 질의
# =============================================================================


def is_connected(g: Topology) -> bool:
    """모든 노드를 잇는 단일 연결 요소인지 확인합니다."""
    return nx.is_connected(g.to_networkx())


def edge_betweenness(g: Topology) -> Dict[Edge, float]:
    """
    간선 매개 중심성 (순서쌍 규약).

    각 간선에 대해 s ≠ t 인 모든 순서쌍 (s, t)의
    (그 간선을 지나는 s–t 최단경로 수) / (s–t 최단경로 수) 를 합산합니다.
    networkx의 비정규화 무방향 값은 비순서쌍 기준이므로 2배 합니다.
    """
    if not is_connected(g):
        raise InvalidInputError("edge_betweenness requires a connected topology")
    return _ordered_edge_betweenness(g)


def _ordered_edge_betweenness(g: Topology) -> Dict[Edge, float]:
    raw = nx.edge_betweenness_centrality(g.to_networkx(), normalized=False)
    return {normalize_edge(u, v): 2.0 * value for (u, v), value in raw.items()}


def rank_edges(centrality: Dict[Edge, float]) -> List[Edge]:
    """중심성 내림차순 (동점은 간선 순서) 간선 목록."""
    return sorted(centrality, key=lambda e: (-round(centrality[e], 9), e))


def graph_stats(g: Topology) -> GraphStats:
    """평균/표준편차 차수, 간선·노드 매개 중심성 통계를 계산합니다."""
    deg = g.degrees().astype(float)
    graph = g.to_networkx()

    if g.edge_count:
        edge_b = np.array(list(_ordered_edge_betweenness(g).values()))
        mean_b, std_b = float(edge_b.mean()), float(edge_b.std())
    else:
        mean_b, std_b = 0.0, 0.0

    node_b = np.array(list(nx.betweenness_centrality(graph, normalized=False).values())) * 2.0

    return GraphStats(
        node_count=g.n,
        edge_count=g.edge_count,
        mean_degree=2.0 * g.edge_count / g.n,
        degree_std=float(deg.std()),
        mean_edge_centrality=mean_b,
        edge_centrality_std=std_b,
        mean_node_centrality=float(node_b.mean()),
        node_centrality_std=float(node_b.std()),
    )


# =============================================================================
# 그래프 파일 입출력
# =============================================================================
#
# 텍스트 형식:
#   file    := header? line*
#   header  := "#!" JSON-object          ; {"n": int, "metadata": {...}}
#   line    := comment | blank | INT WS INT
#   comment := "#" any-text
# 헤더가 없으면 n = 1 + 최대 노드 id.
#
# JSON 형식 (.json):
#   {"n": int, "edges": [[i, j], ...], "metadata": {...}}


def read_topology(path: Union[str, Path]) -> Topology:
    """간선 리스트 텍스트 또는 JSON 그래프 파일을 읽습니다."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"graph file not found: {path}")

    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            return Topology.from_edges(int(doc["n"]), [tuple(e) for e in doc["edges"]], **doc.get("metadata", {}))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"{path}: malformed JSON graph file: {e}") from e

    header: Optional[Dict[str, Any]] = None
    edges: List[Edge] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_num, raw_line in enumerate(f, 1):
            line = raw_line.strip()
            if line.startswith("#!"):
                if line_num != 1:
                    raise InvalidInputError(f"{path}:{line_num}: '#!' header must be the first line")
                try:
                    header = json.loads(line[2:])
                except json.JSONDecodeError as e:
                    raise InvalidInputError(f"{path}:{line_num}: bad JSON header: {e.msg}") from e
                continue
            # 빈 줄이나 주석 건너뛰기
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInputError(f"{path}:{line_num}: expected 'i j', got {line!r}")
            try:
                edges.append(normalize_edge(int(parts[0]), int(parts[1])))
            except ValueError as e:
                raise InvalidInputError(f"{path}:{line_num}: {e}") from e

    if header is not None and "n" in header:
        n = int(header["n"])
    else:
        n = 1 + max((max(e) for e in edges), default=0)
    metadata = dict(header.get("metadata", {})) if header else {}
    logger.info(f"그래프 파일 로드: {path} (n={n}, |E|={len(set(edges))})")
    return Topology.from_edges(n, edges, **metadata)


def write_topology(g: Topology, path: Union[str, Path]) -> Path:
    """그래프를 저장합니다. 확장자가 .json이면 JSON, 아니면 헤더 포함 간선 리스트."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {k: v for k, v in sorted(g.metadata.items())}
    if path.suffix.lower() == ".json":
        doc = {"n": g.n, "edges": [list(e) for e in g.edge_list], "metadata": metadata}
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    else:
        lines = ["#! " + json.dumps({"n": g.n, "metadata": metadata}, sort_keys=True)]
        lines.extend(f"{i} {j}" for i, j in g.edge_list)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
