"""
Quantile capacity allocation against the local congestion-free criterion c.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, TruncationInsufficientError
from .graph import Edge, edge_label, normalize_edge, rank_edges
from .pmf import Pmf, pmf_stats
from .schemas import PlanRow

logger = logging.getLogger(__name__)

Criterion = Union[float, Mapping[Edge, float]]

# 무제한 용량 표식 (시뮬레이션에서 혼잡이 절대 발생하지 않음)
UNLIMITED = int(np.iinfo(np.int64).max)


@dataclass(frozen=True, eq=False)
class CapacityPlan:
    """간선별 정수 용량 l_ij 와 그것이 만족하는 기준 c (스칼라 또는 간선별)."""

    capacity: Dict[Edge, int]
    criterion: Criterion
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def edges(self) -> List[Edge]:
        return sorted(self.capacity)

    def criterion_for(self, edge: Edge) -> float:
        if isinstance(self.criterion, Mapping):
            return float(self.criterion[edge])
        return float(self.criterion)

    def to_json(self) -> Dict[str, Any]:
        if isinstance(self.criterion, Mapping):
            criterion: Any = {edge_label(e): float(c) for e, c in sorted(self.criterion.items())}
        else:
            criterion = float(self.criterion)
        return {
            "criterion": criterion,
            "capacity": {edge_label(e): int(self.capacity[e]) for e in self.edges},
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "CapacityPlan":
        try:
            capacity = {_parse_label(k): int(v) for k, v in doc["capacity"].items()}
            raw = doc["criterion"]
            criterion: Criterion = (
                {_parse_label(k): float(v) for k, v in raw.items()} if isinstance(raw, Mapping) else float(raw)
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed capacity plan: {e}") from e
        return cls(capacity=capacity, criterion=criterion, provenance=dict(doc.get("provenance", {})))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CapacityPlan":
        path = Path(path)
        if not path.exists():
            raise InvalidInputError(f"capacity plan not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
        return cls.from_json(doc)

    @classmethod
    def unlimited(cls, edges: List[Edge]) -> "CapacityPlan":
        """모든 간선에 무제한 용량을 주는 계획 (혼잡 없음)."""
        return cls(capacity={normalize_edge(*e): UNLIMITED for e in edges}, criterion=0.5, provenance={"kind": "unlimited"})


def _parse_label(label: str) -> Edge:
    i, j = str(label).split("-")
    return normalize_edge(int(i), int(j))


def _check_criterion(c: float) -> None:
    if not 0.0 < c < 1.0:
        raise InvalidParameterError(f"criterion c must lie in (0, 1), got {c}")


def quantile_capacity(pmf: Pmf, c: float, edge: Optional[Edge] = None) -> int:
    """재정규화 CMF가 처음으로 c 이상이 되는 최소 k."""
    _check_criterion(c)
    if pmf.total < c:
        raise TruncationInsufficientError(edge if edge is not None else pmf.label, pmf.total, c)
    cmf = pmf.cmf()
    k = int(np.searchsorted(cmf, c, side="left"))
    return min(k, len(pmf) - 1)


def exceedance(pmf: Pmf, capacity: int) -> float:
    """초과 확률 1 - CMF(capacity)."""
    if capacity >= len(pmf):
        return 0.0
    return float(max(0.0, 1.0 - pmf.cmf()[capacity]))


def allocate(pmfs: Mapping[Edge, Pmf], c: Criterion, provenance: Optional[Dict[str, Any]] = None) -> CapacityPlan:
    """
    간선마다 CMF(l) >= c 를 만족하는 최소 용량 l 을 할당합니다.

    Args:
        pmfs: 간선별 Pi_ij
        c: 국소 성능 기준 (스칼라 또는 간선별 매핑)
        provenance: 계획에 기록할 트래픽/잘림 정보

    Returns:
        CapacityPlan: 할당 결과

    Raises:
        TruncationInsufficientError: 보존 질량이 c 보다 작은 간선이 있을 때
    """
    capacity: Dict[Edge, int] = {}
    for edge in sorted(pmfs):
        c_edge = float(c[edge]) if isinstance(c, Mapping) else float(c)
        capacity[edge] = quantile_capacity(pmfs[edge], c_edge, edge)

    criterion: Criterion = dict(c) if isinstance(c, Mapping) else float(c)
    logger.debug(f"용량 할당 완료: {len(capacity)}개 간선, 총 용량 {sum(capacity.values())}")
    return CapacityPlan(capacity=capacity, criterion=criterion, provenance=dict(provenance or {}))


def mean_capacities(pmfs: Mapping[Edge, Pmf]) -> Dict[Edge, int]:
    """평균 부하 기준선: l_ij = ceil(평균)."""
    return {edge: int(math.ceil(pmf_stats(pmf)[0] - 1e-12)) for edge, pmf in sorted(pmfs.items())}


def mean_capacity_plan(pmfs: Mapping[Edge, Pmf]) -> CapacityPlan:
    """
    평균 부하 기준선 계획. 간선별 기준값은 달성된 CMF(ceil(평균)) 입니다.

    기준이 간선마다 다르게 나오는 것을 보고서에서 quantile 계획과 비교합니다.
    """
    capacity = mean_capacities(pmfs)
    achieved = {edge: min(max(1.0 - exceedance(pmfs[edge], l), 1e-12), 1.0 - 1e-12) for edge, l in capacity.items()}
    return CapacityPlan(capacity=capacity, criterion=achieved, provenance={"kind": "mean"})


def check_centrality_alignment(plan: CapacityPlan, centrality: Mapping[Edge, float]) -> bool:
    """
    최대 중심성 간선이 최대 용량을 받았는지 확인합니다.

    임의 그래프에서는 성립이 보장되지 않으므로 결과만 로그로 남깁니다.
    """
    if not plan.capacity:
        return True
    top_edge = rank_edges(dict(centrality))[0]
    top_capacity = max(plan.capacity.values())
    aligned = plan.capacity.get(top_edge) == top_capacity
    if aligned:
        logger.info(f"최대 중심성 간선 {edge_label(top_edge)} 가 최대 용량 {top_capacity} 을 받았습니다")
    else:
        logger.warning(
            f"⚠️  최대 중심성 간선 {edge_label(top_edge)} 용량 {plan.capacity.get(top_edge)} "
            f"< 네트워크 최대 용량 {top_capacity}"
        )
    return aligned


def plan_report(
    plan: CapacityPlan,
    pmfs: Mapping[Edge, Pmf],
    centrality: Optional[Mapping[Edge, float]] = None,
) -> List[PlanRow]:
    """
    간선별 보고서: 용량, pmf 평균/표준편차, 초과 확률, 평균 기준선, 중심성 순위.

    Raises:
        InvalidInputError: 계획과 pmf의 간선 집합이 다를 때
    """
    if set(plan.capacity) != set(pmfs):
        missing = sorted(set(plan.capacity) ^ set(pmfs))
        raise InvalidInputError(f"plan and pmfs cover different edges: {missing[:5]}")

    ranks: Dict[Edge, int] = {}
    if centrality:
        ranks = {edge: i + 1 for i, edge in enumerate(rank_edges(dict(centrality)))}

    baseline = mean_capacities(pmfs)
    rows = []
    for edge in plan.edges:
        pmf = pmfs[edge]
        mean, std = pmf_stats(pmf)
        rows.append(
            PlanRow(
                edge=edge_label(edge),
                capacity=plan.capacity[edge],
                criterion=plan.criterion_for(edge),
                mean=mean,
                std=std,
                exceedance=exceedance(pmf, plan.capacity[edge]),
                mean_capacity=baseline[edge],
                mean_capacity_exceedance=exceedance(pmf, baseline[edge]),
                centrality_rank=ranks.get(edge),
            )
        )
    return rows
