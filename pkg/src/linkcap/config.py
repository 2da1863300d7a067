"""
Configuration management using Pydantic BaseSettings and the JSON run document.
"""

import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .pmf import TruncationPolicy

load_dotenv()


class Settings(BaseSettings):
    """linkcap 프로세스 설정 (환경변수 LINKCAP_*)."""

    # 로깅 설정
    log_level: str = "INFO"
    log_file: Optional[Path] = None

    # 기본 출력 경로
    output_dir: Path = Field(default_factory=lambda: Path("./output"))

    # 병렬 처리
    max_workers: int = Field(default=1, ge=1)
    show_progress: bool = True

    # 시뮬레이터
    path_enumeration_limit: int = Field(default=256, ge=1)
    simulation_block_size: int = Field(default=1024, ge=1)

    model_config = SettingsConfigDict(env_prefix="LINKCAP_", case_sensitive=False)


# 전역 설정 인스턴스
settings = Settings()


# =============================================================================
# 실행 설정 문서 (JSON)
# =============================================================================

_STRICT = ConfigDict(extra="forbid", populate_by_name=True)


class GraphSpec(BaseModel):
    """그래프 소스: 생성기 지정 또는 파일 경로"""

    model_config = _STRICT

    kind: Literal["barabasi_albert", "complete", "file"] = "barabasi_albert"
    n: Optional[int] = Field(default=30, ge=1)
    m: Optional[int] = Field(default=4, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "GraphSpec":
        if self.kind == "file" and not self.path:
            raise ValueError("graph.kind 'file' requires graph.path")
        if self.kind == "barabasi_albert" and (self.n is None or self.m is None):
            raise ValueError("graph.kind 'barabasi_albert' requires graph.n and graph.m")
        if self.kind == "complete" and self.n is None:
            raise ValueError("graph.kind 'complete' requires graph.n")
        return self


class TrafficSpec(BaseModel):
    """트래픽: 스칼라 lambda/q 또는 행렬 파일"""

    model_config = _STRICT

    lam: float = Field(default=4.0, alias="lambda", ge=0.0)
    q: float = Field(default=1.0, ge=0.0, le=1.0)
    matrix_file: Optional[str] = None


class SweepSpec(BaseModel):
    """완전 그래프 간선 제거 스윕"""

    model_config = _STRICT

    n: int = Field(default=20, ge=2)
    n_sequences: int = Field(default=1, ge=1)
    n_frames: int = Field(default=90, ge=1)
    max_steps: Optional[int] = Field(default=None, ge=0)


def _unit_interval(values: List[float]) -> List[float]:
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"probability {v} is outside [0, 1]")
    return values


class RunConfig(BaseModel):
    """실행 설정 문서 (schema_version 1). 정의되지 않은 필드는 거부합니다."""

    model_config = _STRICT

    schema_version: Literal[1] = 1
    graph: GraphSpec = Field(default_factory=GraphSpec)
    traffic: TrafficSpec = Field(default_factory=TrafficSpec)

    # 성능 기준
    c: float = Field(default=0.85, gt=0.0, lt=1.0)
    C: float = Field(default=0.8, ge=0.0, le=1.0)

    # 잘림/합성곱
    epsilon: float = Field(default=0.001, gt=0.0, lt=1.0)
    min_vector_length: Optional[int] = Field(default=None, ge=1)
    convolution: Literal["auto", "direct", "fft"] = "auto"

    # 기대 전역 지표
    lambda_tail_tol: float = Field(default=0.001, gt=0.0, lt=1.0)
    q_grid_size: int = Field(default=11, ge=2)
    p_lambda_mean: float = Field(default=4.0, ge=0.0)

    # 시뮬레이션
    n_frames: Optional[int] = Field(default=None, ge=1)
    frame_counts: List[int] = Field(default_factory=lambda: [30, 90])
    q_values: List[float] = Field(default_factory=lambda: [1.0, 0.75, 0.5, 0.25])
    simulate_q_values: List[float] = Field(default_factory=lambda: [1.0, 0.6])
    std_q_grid: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    top_k: int = Field(default=3, ge=1)
    bin_width: float = Field(default=0.1, gt=0.0, le=1.0)
    dump_loads: bool = False

    sweep: SweepSpec = Field(default_factory=SweepSpec)

    seed: Optional[int] = Field(default=None, ge=0)
    out_dir: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)

    _check_q_lists = field_validator("q_values", "simulate_q_values", "std_q_grid")(_unit_interval)

    @field_validator("frame_counts")
    @classmethod
    def _positive_frames(cls, values: List[int]) -> List[int]:
        if not values or any(v < 1 for v in values):
            raise ValueError("frame_counts must be a non-empty list of positive integers")
        return values

    def truncation_policy(self) -> TruncationPolicy:
        return TruncationPolicy(epsilon=self.epsilon, min_length=self.min_vector_length, method=self.convolution)

    def simulation_frames(self) -> List[int]:
        return [self.n_frames] if self.n_frames is not None else list(self.frame_counts)

    def sweep_frames(self) -> int:
        return self.n_frames if self.n_frames is not None else self.sweep.n_frames

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir) if self.out_dir else settings.output_dir

    def resolved_workers(self) -> int:
        return self.workers or settings.max_workers

    def require_seed(self, command: str) -> int:
        """확률적 명령은 seed가 반드시 필요합니다 (암묵적 비결정성 금지)."""
        if self.seed is None:
            raise ConfigError(f"'{command}' is stochastic and needs a seed", ["seed: set it in the config or pass --seed"])
        return self.seed

    def graph_seed(self) -> Optional[int]:
        return self.graph.seed if self.graph.seed is not None else self.seed


# 사전 정의 프리셋
PRESETS: Dict[str, Dict[str, Any]] = {
    "full": {
        "sweep": {"n": 20, "n_frames": 90},
        "lambda_tail_tol": 0.001,
        "q_grid_size": 11,
    },
    "desk": {
        "sweep": {"n": 10, "n_frames": 30},
        "lambda_tail_tol": 0.01,
        "q_grid_size": 5,
    },
}


def _deep_merge(base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _set_dotted(doc: Dict[str, Any], dotted: str, value: Any) -> None:
    node = doc
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def read_config_file(path: Path) -> Dict[str, Any]:
    """JSON 설정 파일을 읽습니다. 문법 오류는 줄:열 진단과 함께 ConfigError."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}", [str(e)]) from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON", [f"line {e.lineno}, column {e.colno}: {e.msg}"]) from e
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object", ["<root>: expected an object"])
    return doc


def load_run_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    preset: Optional[str] = None,
) -> RunConfig:
    """
    실행 설정을 조립합니다. 우선순위: 기본값 < 프리셋 < 설정 파일 < CLI 플래그.

    Args:
        path: JSON 설정 파일 경로
        overrides: 점 표기 키 ("traffic.lambda") → 값. None 값은 무시합니다.
        preset: "full" 또는 "desk"

    Returns:
        RunConfig: 검증된 설정
    """
    doc: Dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}'", [f"preset: choose one of {sorted(PRESETS)}"])
        doc = _deep_merge(doc, PRESETS[preset])
    if path is not None:
        doc = _deep_merge(doc, read_config_file(Path(path)))
    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(doc, dotted, value)

    try:
        return RunConfig.model_validate(doc)
    except ValidationError as e:
        diagnostics = [
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigError("invalid run configuration", diagnostics) from e
