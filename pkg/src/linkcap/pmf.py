"""
Analytic per-edge load distribution: Poisson, Phi, Omega, truncation and convolution.
"""

import concurrent.futures
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import fft as sp_fft
from scipy import stats

from .errors import InvalidInputError, InvalidParameterError
from .graph import Edge, normalize_edge
from .routing import RoutingTable

logger = logging.getLogger(__name__)

# 조립 후 잘림 결손 허용 한계 (넘으면 경고)
DEFICIT_WARNING = 0.01

# "auto" 모드에서 직접 합성곱 예상 연산량이 이 값을 넘으면 FFT 경로 사용
DIRECT_COST_LIMIT = 2e7

ConvolutionMethod = Literal["auto", "direct", "fft"]


# =============================================================================
# 트래픽/잘림 설정
# =============================================================================


@dataclass(frozen=True, eq=False)
class TrafficConfig:
    """
    순서쌍별 트래픽 파라미터. lam[m, n]은 활성화 시 평균 패킷 수, q[m, n]은 활성화 확률.

    대각 성분은 무시됩니다. q[m, n]과 q[n, m]은 독립 파라미터입니다.
    """

    lam: np.ndarray
    q: np.ndarray
    description: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lam = np.array(self.lam, dtype=float)
        q = np.array(self.q, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1] or lam.shape != q.shape:
            raise InvalidInputError(f"traffic matrices must be square and equal-shaped, got {lam.shape} and {q.shape}")
        off = ~np.eye(lam.shape[0], dtype=bool)
        if not np.all(np.isfinite(lam[off])) or (lam[off] < 0).any():
            raise InvalidParameterError("lambda must be a finite non-negative value for every pair")
        if not np.all(np.isfinite(q[off])) or (q[off] < 0).any() or (q[off] > 1).any():
            raise InvalidParameterError("q must lie in [0, 1] for every pair")
        np.fill_diagonal(lam, 0.0)
        np.fill_diagonal(q, 0.0)
        lam.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "q", q)

    @classmethod
    def homogeneous(cls, n: int, lam: float, q: float) -> "TrafficConfig":
        """모든 순서쌍에 같은 lambda, q를 적용합니다."""
        if lam < 0:
            raise InvalidParameterError(f"lambda must be >= 0, got {lam}")
        if not 0.0 <= q <= 1.0:
            raise InvalidParameterError(f"q must lie in [0, 1], got {q}")
        return cls(
            lam=np.full((n, n), float(lam)),
            q=np.full((n, n), float(q)),
            description={"kind": "homogeneous", "lambda": float(lam), "q": float(q)},
        )

    @classmethod
    def from_file(cls, path: Union[str, Path], n: int) -> "TrafficConfig":
        """JSON 행렬 파일 {"lambda": [[...]], "q": [[...]]} 을 읽습니다."""
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            lam, q = np.array(doc["lambda"], dtype=float), np.array(doc["q"], dtype=float)
        except FileNotFoundError as e:
            raise InvalidInputError(f"traffic matrix file not found: {path}") from e
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"{path}: malformed traffic matrix file: {e}") from e
        if lam.shape != (n, n):
            raise InvalidInputError(f"{path}: expected {n}x{n} matrices, got {lam.shape}")
        return cls(lam=lam, q=q, description={"kind": "matrix", "file": str(path)})

    @property
    def n(self) -> int:
        return int(self.lam.shape[0])

    def pair(self, m: int, n: int) -> Tuple[float, float]:
        return float(self.lam[m, n]), float(self.q[m, n])

    def active_pairs(self) -> List[Tuple[int, int]]:
        """패킷을 보낼 수 있는 순서쌍 (lambda > 0, q > 0), 사전식 정렬."""
        ms, ns = np.nonzero((self.lam > 0) & (self.q > 0))
        return [(int(m), int(n)) for m, n in zip(ms, ns)]


@dataclass(frozen=True)
class TruncationPolicy:
    """
    Omega 벡터 길이 Q 결정 규칙.

    Q는 Omega(Q-1) <= epsilon * Omega(round(lambda)) 를 만족하는 최소값이며
    Q >= round(lambda) + 1 입니다. min_length가 있으면 그 이상으로 늘립니다.
    """

    epsilon: float = 0.001
    min_length: Optional[int] = None
    method: ConvolutionMethod = "auto"

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.min_length is not None and self.min_length < 1:
            raise InvalidParameterError(f"min_length must be >= 1, got {self.min_length}")
        if self.method not in ("auto", "direct", "fft"):
            raise InvalidParameterError(f"unknown convolution method: {self.method}")


# =============================================================================
# Poisson / Phi / Omega
# =============================================================================


def _check_domain(lam: float, q: float = 0.0, f: float = 0.0, k: int = 0) -> None:
    if lam < 0 or not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be >= 0, got {lam}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q}")
    if not 0.0 <= f <= 1.0:
        raise InvalidParameterError(f"f must lie in [0, 1], got {f}")
    if k < 0:
        raise InvalidParameterError(f"k must be >= 0, got {k}")


def poisson_pmf(lam: float, k: int) -> float:
    """P(lambda, k) = lambda^k e^-lambda / k! (scipy가 로그 공간에서 계산)."""
    _check_domain(lam, k=k)
    return float(stats.poisson.pmf(k, lam))


def phi(lam: float, q: float, k: int) -> float:
    """
    한 순서쌍이 한 프레임에 보내는 패킷 수의 pmf.

    k = 0: (1 - P(lambda, 0))(1 - q) + P(lambda, 0)
    k > 0: q P(lambda, k)
    """
    _check_domain(lam, q=q, k=k)
    if k == 0:
        p0 = poisson_pmf(lam, 0)
        return (1.0 - p0) * (1.0 - q) + p0
    return q * poisson_pmf(lam, k)


def omega(lam: float, q: float, f: float, k: int) -> float:
    """
    한 순서쌍이 간선 ij에 싣는 패킷 수의 pmf.

    k = 0: f Phi(lambda, q, 0) + 1 - f
    k > 0: f Phi(lambda, q, k)
    """
    _check_domain(lam, q=q, f=f, k=k)
    if k == 0:
        return f * phi(lam, q, 0) + 1.0 - f
    return f * phi(lam, q, k)


def phi_vector(lam: float, q: float, length: int) -> np.ndarray:
    """Phi(lambda, q, k), k = 0..length-1."""
    _check_domain(lam, q=q)
    p = stats.poisson.pmf(np.arange(length), lam)
    out = q * p
    out[0] = (1.0 - p[0]) * (1.0 - q) + p[0]
    return out


@lru_cache(maxsize=4096)
def omega_vector(lam: float, q: float, f: float, length: int) -> np.ndarray:
    """Omega(lambda, q, f, k), k = 0..length-1 (읽기 전용 배열)."""
    _check_domain(lam, q=q, f=f)
    out = f * phi_vector(lam, q, length)
    out[0] += 1.0 - f
    out.setflags(write=False)
    return out


def choose_Q(lam: float, q: float, f: float, policy: Optional[TruncationPolicy] = None) -> int:
    """
    순서쌍 Omega 벡터 길이 Q를 고릅니다.

    lambda = 0 이면 모든 질량이 0에 있으므로 Q = 1.
    """
    policy = policy or TruncationPolicy()
    _check_domain(lam, q=q, f=f)
    if lam == 0:
        return 1

    r = int(np.floor(lam + 0.5))
    target = policy.epsilon * omega(lam, q, f, r)
    scale = f * q

    start = r
    while True:
        ks = np.arange(start, start + 256)
        tail = scale * stats.poisson.pmf(ks, lam)
        if start == 0:
            tail[0] = omega(lam, q, f, 0)
        hits = np.nonzero(tail <= target)[0]
        if hits.size:
            Q = int(ks[hits[0]]) + 1
            break
        start += 256

    if policy.min_length is not None:
        Q = max(Q, policy.min_length)
    return Q


# =============================================================================
# pmf 자료형과 조립
# =============================================================================


@dataclass(frozen=True, eq=False)
class Pmf:
    """패킷 수 k = 0..len-1 에 대한 유한 pmf. truncation_deficit = 1 - Σ mass."""

    mass: np.ndarray
    label: str = ""
    truncation_deficit: float = field(default=0.0, init=False)

    def __post_init__(self) -> None:
        mass = np.array(self.mass, dtype=float).ravel()
        if mass.size == 0:
            raise InvalidInputError("pmf needs at least one entry")
        if (mass < -1e-12).any():
            raise InvalidInputError(f"pmf has negative mass: min={mass.min():.3e}")
        mass = np.clip(mass, 0.0, None)
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "truncation_deficit", max(0.0, 1.0 - float(mass.sum())))

    def __len__(self) -> int:
        return int(self.mass.size)

    @classmethod
    def point_mass(cls, k: int = 0, label: str = "") -> "Pmf":
        mass = np.zeros(k + 1)
        mass[k] = 1.0
        return cls(mass=mass, label=label)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def cmf(self) -> np.ndarray:
        """보존 질량으로 재정규화한 누적 질량 함수."""
        total = self.total
        if total <= 0:
            raise InvalidInputError(f"pmf {self.label or ''} has zero total mass")
        return np.cumsum(self.mass) / total

    def to_frame(self) -> pd.DataFrame:
        """k, mass, cmf 컬럼의 DataFrame."""
        return pd.DataFrame({"k": np.arange(len(self)), "mass": self.mass, "cmf": self.cmf()})

    def to_json(self) -> Dict[str, Any]:
        mean, std = pmf_stats(self)
        return {
            "label": self.label,
            "length": len(self),
            "total_mass": self.total,
            "truncation_deficit": self.truncation_deficit,
            "mean": mean,
            "std": std,
            "mass": [float(x) for x in self.mass],
        }


def pmf_stats(p: Pmf) -> Tuple[float, float]:
    """재정규화한 분포의 (평균, 표준편차)."""
    total = p.total
    if total <= 0:
        raise InvalidInputError("pmf_stats needs a pmf with positive total mass")
    k = np.arange(len(p), dtype=float)
    w = p.mass / total
    mean = float(np.dot(k, w))
    var = float(np.dot((k - mean) ** 2, w))
    return mean, float(np.sqrt(max(var, 0.0)))


def total_variation(p: Union[Pmf, np.ndarray], q: Union[Pmf, np.ndarray]) -> float:
    """두 pmf 사이의 총변동 거리 0.5 Σ |p - q| (짧은 쪽은 0으로 채움)."""
    a = p.mass if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    b = q.mass if isinstance(q, Pmf) else np.asarray(q, dtype=float)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    return 0.5 * float(np.abs(a - b).sum())


def convolve_direct(vectors: Iterable[np.ndarray]) -> np.ndarray:
    """기준 경로: 순차적 선형 합성곱."""
    result = np.ones(1)
    for v in vectors:
        result = np.convolve(result, v)
    return result


def convolve_fft(groups: Dict[Tuple[float, float, float, int], int]) -> np.ndarray:
    """
    FFT 경로: 같은 Omega 벡터는 스펙트럼 거듭제곱으로 한 번에 합성곱합니다.

    결과 길이는 Σ count·(Q-1) + 1 이며, 반올림 오차로 생긴 작은 음수는 0으로 자릅니다.
    """
    length = 1 + sum(count * (key[3] - 1) for key, count in groups.items())
    size = sp_fft.next_fast_len(length, real=True)
    spectrum = np.ones(size // 2 + 1, dtype=complex)
    for key, count in groups.items():
        spectrum *= sp_fft.rfft(omega_vector(*key), size) ** count
    result = sp_fft.irfft(spectrum, size)[:length]
    return np.clip(result, 0.0, None)


def _direct_cost(lengths: List[int]) -> float:
    cost, current = 0.0, 1
    for q_len in lengths:
        cost += current * q_len
        current += q_len - 1
    return cost


def edge_load_pmf(
    edge: Edge,
    table: RoutingTable,
    traffic: TrafficConfig,
    policy: Optional[TruncationPolicy] = None,
) -> Pmf:
    """
    간선 ij의 부하 pmf Pi_ij 를 조립합니다.

    1) A_ij 를 라우팅 테이블에서 읽고, 2) 쌍마다 길이 Q의 Omega 벡터를 만들고,
    3) 모든 벡터를 선형 합성곱합니다. 결과 길이는 Σ(Q_xy - 1) + 1 입니다.

    Args:
        edge: 간선 (i, j)
        table: 같은 토폴로지로 만든 라우팅 테이블
        traffic: 순서쌍별 트래픽
        policy: 잘림 규칙 및 합성곱 방식

    Returns:
        Pmf: truncation_deficit 가 기록된 Pi_ij
    """
    policy = policy or TruncationPolicy()
    key_edge = normalize_edge(*edge)
    routes = table.contributing_pairs(key_edge)
    if traffic.n != table.n:
        raise InvalidInputError(f"traffic is for {traffic.n} nodes, routing table for {table.n}")

    keys: List[Tuple[float, float, float, int]] = []
    for (m, n), f in zip(routes.pairs, routes.fractions):
        lam, q = traffic.pair(int(m), int(n))
        if lam == 0 or q == 0:
            continue  # Omega = 0에서의 점질량, 합성곱 항등원
        keys.append((lam, q, float(f), choose_Q(lam, q, float(f), policy)))

    label = f"{key_edge[0]}-{key_edge[1]}"
    if not keys:
        return Pmf.point_mass(0, label=label)

    method = policy.method
    if method == "auto":
        method = "fft" if _direct_cost([k[3] for k in keys]) > DIRECT_COST_LIMIT else "direct"

    if method == "direct":
        mass = convolve_direct(omega_vector(*k) for k in keys)
    else:
        mass = convolve_fft(dict(Counter(keys)))

    pmf = Pmf(mass=mass, label=label)
    if pmf.truncation_deficit >= DEFICIT_WARNING:
        logger.warning(f"⚠️  간선 {label}: 잘림 결손 {pmf.truncation_deficit:.4%} (Q를 늘리세요)")
    return pmf


def edge_load_pmfs(
    table: RoutingTable,
    traffic: TrafficConfig,
    policy: Optional[TruncationPolicy] = None,
    edges: Optional[Iterable[Edge]] = None,
    workers: int = 1,
) -> Dict[Edge, Pmf]:
    """여러 간선의 Pi_ij 를 (병렬로) 조립합니다. 결과는 간선 순서로 정렬됩니다."""
    targets = sorted(normalize_edge(*e) for e in edges) if edges is not None else table.topology.edge_list

    if workers <= 1 or len(targets) < 2:
        return {e: edge_load_pmf(e, table, traffic, policy) for e in targets}

    results: Dict[Edge, Pmf] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_edge = {executor.submit(edge_load_pmf, e, table, traffic, policy): e for e in targets}
        for future in concurrent.futures.as_completed(future_to_edge):
            results[future_to_edge[future]] = future.result()
    return {e: results[e] for e in targets}
