"""
Pydantic record models exchanged between modules and written as artifacts.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

# =============================================================================
# 그래프 통계 (graph.py)
# =============================================================================


class GraphStats(BaseModel):
    """토폴로지 요약 통계"""

    model_config = ConfigDict(frozen=True)

    node_count: int = Field(..., ge=0, description="노드 수 |V|")
    edge_count: int = Field(..., ge=0, description="간선 수 |E|")
    mean_degree: float = Field(..., ge=0.0, description="평균 차수 <k> = 2|E|/|V|")
    degree_std: float = Field(..., ge=0.0, description="차수 표준편차 sigma_k")
    mean_edge_centrality: float = Field(..., ge=0.0, description="평균 간선 매개 중심성 <B>")
    edge_centrality_std: float = Field(..., ge=0.0, description="간선 중심성 표준편차 sigma_B")
    mean_node_centrality: float = Field(default=0.0, ge=0.0, description="평균 노드 매개 중심성")
    node_centrality_std: float = Field(default=0.0, ge=0.0, description="노드 중심성 표준편차")


# =============================================================================
# 용량 할당 보고서 (allocation.py)
# =============================================================================


class PlanRow(BaseModel):
    """간선별 용량 할당 보고서 한 줄"""

    edge: str = Field(..., description="간선 라벨 'i-j'")
    capacity: int = Field(..., ge=0, description="할당 용량 l_ij")
    criterion: float = Field(..., gt=0.0, lt=1.0, description="간선 성능 기준 c_ij")
    mean: float = Field(..., ge=0.0, description="pmf 평균")
    std: float = Field(..., ge=0.0, description="pmf 표준편차")
    exceedance: float = Field(..., ge=0.0, le=1.0, description="초과 확률 1 - CMF(l_ij)")
    mean_capacity: int = Field(..., ge=0, description="평균 기반 기준선 용량 ceil(mean)")
    mean_capacity_exceedance: float = Field(..., ge=0.0, le=1.0, description="기준선 초과 확률")
    centrality_rank: Optional[int] = Field(None, ge=1, description="간선 중심성 순위 (1 = 최대)")


# =============================================================================
# 전역 성능 지표 (metrics.py)
# =============================================================================


class HistogramBin(BaseModel):
    """정규화 히스토그램 구간"""

    lower: float = Field(..., description="구간 하한")
    upper: float = Field(..., description="구간 상한")
    mass: float = Field(..., ge=0.0, le=1.0, description="구간 질량 (합 = 1)")


class GlobalMeasure(BaseModel):
    """전역 지표 g: C 이상 비율로 혼잡이 없는 간선의 비율"""

    g: float = Field(..., ge=0.0, le=1.0, description="전역 지표 값")
    C: float = Field(..., description="전역 기준 C")
    n_frames: int = Field(..., ge=1, description="관측 프레임 수")
    edge_count: int = Field(..., ge=0, description="간선 수")
    lam: Optional[float] = Field(None, description="트래픽 lambda")
    q: Optional[float] = Field(None, description="활성화 확률 q")
    c: Optional[float] = Field(None, description="국소 기준 c")
    topology_id: Optional[str] = Field(None, description="토폴로지 식별자")


class CurvePoint(BaseModel):
    """g-vs-C 곡선의 한 점"""

    C: float
    g: float = Field(..., ge=0.0, le=1.0)


class SweepRecord(BaseModel):
    """간선 제거 스윕의 토폴로지 스냅샷 한 건"""

    sequence: int = Field(..., ge=0, description="제거 시퀀스 번호")
    step: int = Field(..., ge=0, description="제거 단계 (0 = 완전 그래프)")
    topology_id: str = Field(..., description="스냅샷 식별자")
    removed_edge: Optional[str] = Field(None, description="직전 단계에서 제거된 간선")
    stats: GraphStats = Field(..., description="그래프 통계")
    expected_g: float = Field(..., ge=0.0, le=1.0, description="E_G(g)")
    edges: List[List[int]] = Field(default_factory=list, description="스냅샷 간선 목록 (CSV 제외)")

    def to_row(self) -> Dict[str, Any]:
        """CSV 한 줄로 평탄화합니다."""
        row: Dict[str, Any] = {
            "sequence": self.sequence,
            "step": self.step,
            "topology_id": self.topology_id,
            "removed_edge": self.removed_edge or "",
        }
        row.update(self.stats.model_dump())
        row["expected_g"] = self.expected_g
        return row


class StdPoint(BaseModel):
    """최대 중심성 간선 pmf 표준편차 vs q"""

    q: float = Field(..., ge=0.0, le=1.0)
    edge: str
    mean: float
    std: float = Field(..., ge=0.0)


def rows_of(records: List[BaseModel]) -> List[Dict[str, Any]]:
    """모델 리스트를 dict 리스트로 변환합니다."""
    return [r.model_dump() for r in records]
