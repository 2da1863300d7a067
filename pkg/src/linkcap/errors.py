"""
Exception hierarchy shared by every linkcap module.
"""

from typing import Any, List, Optional, Sequence


class LinkCapError(Exception):
    """linkcap 공통 예외 기본 클래스."""


class InvalidParameterError(LinkCapError, ValueError):
    """스칼라 인자가 허용 범위를 벗어났을 때 발생합니다."""


class InvalidInputError(LinkCapError, ValueError):
    """입력 구조가 올바르지 않을 때 발생합니다 (비연결 그래프, 간선 불일치 등)."""


class InvalidStateError(LinkCapError, RuntimeError):
    """현재 상태에서 수행할 수 없는 연산일 때 발생합니다."""


class TruncationInsufficientError(LinkCapError):
    """잘린 pmf의 보존 질량이 성능 기준 c보다 작을 때 발생합니다."""

    def __init__(self, edge: Any, retained_mass: float, criterion: float):
        self.edge = edge
        self.retained_mass = retained_mass
        self.criterion = criterion
        super().__init__(
            f"edge {edge}: retained pmf mass {retained_mass:.6f} < c={criterion}; "
            "raise the vector length Q (min_vector_length) or lower epsilon"
        )


class ConfigError(LinkCapError):
    """설정 파일 파싱/검증 실패. diagnostics에 줄/필드 단위 메시지를 담습니다."""

    def __init__(self, message: str, diagnostics: Optional[Sequence[str]] = None):
        self.diagnostics: List[str] = list(diagnostics or [])
        detail = "\n".join(f"  - {d}" for d in self.diagnostics)
        super().__init__(f"{message}\n{detail}" if detail else message)
