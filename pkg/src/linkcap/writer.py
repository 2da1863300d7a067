"""
CSV/JSON artifact writer for every command output.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from .allocation import CapacityPlan
from .pmf import Pmf
from .schemas import PlanRow, rows_of
from .simulator import FrameTrace

logger = logging.getLogger(__name__)

# 모든 CSV 실수 출력 형식 (재실행 시 바이트 동일)
FLOAT_FORMAT = "%.12g"


class ArtifactWriter:
    """출력 디렉토리 하나에 산출물을 쓰는 클래스. 타임스탬프는 기록하지 않습니다."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    @staticmethod
    def sanitize_name(name: str) -> str:
        """
        파일 이름을 정리합니다.

        Args:
            name: 원본 이름

        Returns:
            str: 영숫자, '.', '-', '_' 만 남긴 이름
        """
        cleaned = re.sub(r"[^A-Za-z0-9.\-_]+", "_", name)
        return re.sub(r"_{2,}", "_", cleaned).strip("_")

    @staticmethod
    def tag(**parts: Any) -> str:
        """파라미터 조합 태그 ('q0.75_f30' 등). 실수는 %g 로 표기합니다."""
        return "_".join(f"{k}{v:g}" if isinstance(v, float) else f"{k}{v}" for k, v in parts.items())

    def _path(self, name: str) -> Path:
        path = self.out_dir / self.sanitize_name(name)
        self.written.append(path)
        return path

    # =========================================================================
    # 기본 형식
    # =========================================================================

    def write_csv(self, name: str, data: Union[pd.DataFrame, Sequence[BaseModel], Sequence[Mapping[str, Any]]]) -> Path:
        """DataFrame 또는 레코드 목록을 CSV로 씁니다."""
        if isinstance(data, pd.DataFrame):
            frame = data
        else:
            rows = list(data)
            frame = pd.DataFrame(rows_of(rows) if rows and isinstance(rows[0], BaseModel) else rows)
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"CSV 저장: {path} ({len(frame)}행)")
        return path

    def write_json(self, name: str, doc: Any) -> Path:
        """정렬된 키, 들여쓰기 2의 JSON 문서를 씁니다."""
        path = self._path(name)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
        logger.debug(f"JSON 저장: {path}")
        return path

    # =========================================================================
    # 도메인 산출물
    # =========================================================================

    def write_pmf(self, pmf: Pmf, stem: str) -> Path:
        """k, mass, cmf 컬럼의 pmf CSV."""
        return self.write_csv(f"{stem}.csv", pmf.to_frame())

    def write_normalization_report(self, pmfs: Mapping[Any, Pmf], stem: str) -> Path:
        rows: List[Dict[str, Any]] = [
            {"edge": pmf.label, "length": len(pmf), "total_mass": pmf.total, "truncation_deficit": pmf.truncation_deficit}
            for _, pmf in sorted(pmfs.items())
        ]
        return self.write_csv(f"{stem}.csv", rows)

    def write_plan(self, plan: CapacityPlan, rows: Sequence[PlanRow], stem: str) -> List[Path]:
        """용량 계획 JSON 과 (edge, capacity, exceedance, mean, std) CSV."""
        frame = pd.DataFrame(rows_of(list(rows)))[["edge", "capacity", "exceedance", "mean", "std"]]
        return [self.write_json(f"{stem}.json", plan.to_json()), self.write_csv(f"{stem}.csv", frame)]

    def write_trace(self, trace: FrameTrace, stem: str, dump_loads: bool = False) -> List[Path]:
        paths = [self.write_csv(f"{stem}_summary.csv", trace.summary())]
        if dump_loads:
            paths.append(self.write_csv(f"{stem}_loads.csv", trace.loads_frame()))
        return paths

    def write_records(self, name: str, records: Iterable[Any]) -> Path:
        """to_row() 를 가진 레코드 목록을 CSV로 씁니다."""
        return self.write_csv(name, [r.to_row() for r in records])
