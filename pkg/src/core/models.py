"""DPM (Diamond Polymer Moments) - Data Models"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.core.exceptions import ConfigurationError, DomainError

Real = Union[float, Fraction]


class FloatKind(Enum):
    """부동소수점 종류"""
    BINARY64 = "binary64"
    EXTENDED = "extended"


# ==================== 격자 / 상수 ====================

@dataclass(frozen=True)
class BranchingParams:
    """다이아몬드 격자 파라미터 (분기수 b, 분절수 s)"""
    b: int
    s: Optional[int] = None  # 생략 시 s = b (임계)

    def __post_init__(self):
        if self.s is None:
            object.__setattr__(self, "s", self.b)
        if not isinstance(self.b, (int, np.integer)) or not isinstance(self.s, (int, np.integer)):
            raise DomainError(f"b and s must be integers, got b={self.b!r}, s={self.s!r}")
        if self.b < 2 or self.s < 2:
            raise DomainError(f"b, s must be >= 2, got b={self.b}, s={self.s}", value=(self.b, self.s))

    @property
    def is_critical(self) -> bool:
        return self.b == self.s

    def require_critical(self, operation: str) -> None:
        """임계(s=b) 전용 연산 검사"""
        if not self.is_critical:
            raise DomainError(f"{operation} requires s == b (got b={self.b}, s={self.s})",
                              value=(self.b, self.s))


@dataclass(frozen=True)
class CriticalConstants:
    """임계 상수 κ_b, η_b (κ_b² 와 η_b 는 유리수)"""
    b: int
    kappa_sq: Fraction   # κ_b² = 2/(b-1)
    eta_exact: Fraction  # η_b = (b+1)/(3(b-1))

    @property
    def kappa(self) -> float:
        return float(self.kappa_sq) ** 0.5

    @property
    def eta(self) -> float:
        return float(self.eta_exact)

    def to_dict(self) -> dict:
        return {"b": self.b, "kappa": self.kappa, "eta": self.eta,
                "kappa_sq": str(self.kappa_sq), "eta_exact": str(self.eta_exact)}


@dataclass(frozen=True)
class PrecisionPolicy:
    """수치 허용오차 / 래더 정책"""
    float_kind: FloatKind = FloatKind.BINARY64
    mantissa_bits: Optional[int] = None   # EXTENDED 일 때만 사용
    tol_abs: float = 1e-10
    tol_rel: float = 1e-8
    cross_tol: float = 1e-4               # 두 경로 비교 / 래더 실패 판정
    series_tail_tol: float = 1e-12
    ladder_min_exponent: int = 8          # n = 2^8 부터
    ladder_max_exponent: int = 20         # n = 2^20 까지
    series_min_terms: int = 200           # 급수 최소 항 수
    x_switch: float = 1e-4                # 급수 전환 지점
    delta_grid_step: float = 1e-3         # δ_b 격자 간격

    def __post_init__(self):
        if isinstance(self.float_kind, str):
            object.__setattr__(self, "float_kind", FloatKind(self.float_kind))
        for name in ("tol_abs", "tol_rel", "cross_tol", "series_tail_tol", "x_switch", "delta_grid_step"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive", key=name)
        if not 8 <= self.ladder_max_exponent <= 30:
            raise ConfigurationError("ladder_max_exponent must lie in [8, 30]", key="ladder_max_exponent")
        if not 1 <= self.ladder_min_exponent <= self.ladder_max_exponent:
            raise ConfigurationError("ladder_min_exponent must lie in [1, ladder_max_exponent]",
                                     key="ladder_min_exponent")
        if self.float_kind == FloatKind.EXTENDED and not (self.mantissa_bits and self.mantissa_bits > 53):
            raise ConfigurationError("extended float_kind needs mantissa_bits > 53", key="mantissa_bits")

    @property
    def working_bits(self) -> int:
        """mpmath 작업 정밀도 (비트)"""
        if self.float_kind == FloatKind.EXTENDED:
            return max(256, int(self.mantissa_bits))
        return 256

    def to_dict(self) -> dict:
        return {
            "float_kind": self.float_kind.value,
            "mantissa_bits": self.mantissa_bits,
            "tol_abs": self.tol_abs,
            "tol_rel": self.tol_rel,
            "cross_tol": self.cross_tol,
            "series_tail_tol": self.series_tail_tol,
            "ladder_min_exponent": self.ladder_min_exponent,
            "ladder_max_exponent": self.ladder_max_exponent,
            "series_min_terms": self.series_min_terms,
            "x_switch": self.x_switch,
            "delta_grid_step": self.delta_grid_step,
        }


DEFAULT_POLICY = PrecisionPolicy()


# ==================== 수치 결과 ====================

@dataclass
class SeriesResult:
    """절단 급수 결과"""
    value: float
    terms: int        # 직접 합산한 항 수
    tail: float       # 해석적으로 닫은 꼬리
    achieved: float   # 남은 꼬리 오차 추정


@dataclass
class LadderEstimate:
    """n = 2^k 래더 + 외삽 결과"""
    value: float
    residual: float
    converged_n: int
    ladder: List[int] = field(default_factory=list)
    raw: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": self.value, "residual": self.residual, "converged_n": self.converged_n}


# ==================== 모멘트 ====================

@dataclass
class MomentVector:
    """
    중심 모멘트 벡터 (ρ^(2), ..., ρ^(m_max))

    ρ^(0) = 1, ρ^(1) = 0 은 암묵적 규약
    """
    values: List[Real]
    exact: bool = False

    def __post_init__(self):
        self.values = list(self.values)
        if not self.values:
            raise DomainError("MomentVector needs at least rho^(2)")
        if self.exact:
            self.values = [Fraction(v) for v in self.values]
        if self.values[0] < 0:
            raise DomainError(f"rho^(2) must be nonnegative, got {self.values[0]}", value=self.values[0])

    @property
    def m_max(self) -> int:
        return len(self.values) + 1

    def __getitem__(self, m: int) -> Real:
        """m 차 모멘트 (m >= 2)"""
        if m < 2 or m > self.m_max:
            raise IndexError(f"moment order {m} outside 2..{self.m_max}")
        return self.values[m - 2]

    def truncated(self, m_max: int) -> "MomentVector":
        return MomentVector(self.values[:m_max - 1], exact=self.exact)

    @classmethod
    def zeros(cls, m_max: int, exact: bool = False) -> "MomentVector":
        zero = Fraction(0) if exact else 0.0
        return cls([zero] * (m_max - 1), exact=exact)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)

    def to_dict(self) -> dict:
        return {f"rho_{m}": (str(v) if self.exact else float(v))
                for m, v in zip(range(2, self.m_max + 1), self.values)}


@dataclass
class LimitRow:
    """극한 테이블 한 행"""
    r: float
    values: List[float]                   # R^(2..m_max)(r)
    converged_n: int = 0
    residuals: List[float] = field(default_factory=list)
    converged: bool = True
    note: str = ""

    @property
    def m_max(self) -> int:
        return len(self.values) + 1

    def __getitem__(self, m: int) -> float:
        return self.values[m - 2]

    @property
    def residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def to_dict(self) -> dict:
        data = {"r": self.r}
        for m, v in zip(range(2, self.m_max + 1), self.values):
            data[f"R{m}"] = v
        for m, v in zip(range(2, self.m_max + 1), self.residuals):
            data[f"residual_{m}"] = v
        data["converged_n"] = self.converged_n
        data["converged"] = self.converged
        return data


@dataclass
class LimitTable:
    """극한 함수 테이블 R_b^(m)(r)"""
    b: int
    m_max: int
    rows: Dict[float, LimitRow] = field(default_factory=dict)

    def add(self, row: LimitRow) -> None:
        if row.m_max < self.m_max:
            raise DomainError(f"row at r={row.r} carries m_max={row.m_max} < {self.m_max}")
        self.rows[float(row.r)] = row

    def get(self, r: float) -> Optional[LimitRow]:
        return self.rows.get(float(r))

    def has(self, r: float) -> bool:
        return float(r) in self.rows

    def sorted_rows(self) -> List[LimitRow]:
        return [self.rows[r] for r in sorted(self.rows)]

    def is_monotone(self) -> bool:
        """행 간 단조 증가 + 양수 검사"""
        rows = self.sorted_rows()
        for row in rows:
            if any(not v > 0 for v in row.values[:self.m_max - 1]):
                return False
        for lo, hi in zip(rows, rows[1:]):
            if any(not a < c for a, c in zip(lo.values[:self.m_max - 1], hi.values[:self.m_max - 1])):
                return False
        return True


# ==================== 시뮬레이터 ====================

@dataclass(frozen=True)
class GraphStats:
    """다이아몬드 그래프 D_n 계수 (임의 정밀도 정수)"""
    b: int
    s: int
    n: int
    bond_count: int
    path_count: int
    path_length: int

    def to_dict(self) -> dict:
        return {"b": self.b, "s": self.s, "n": self.n, "bond_count": str(self.bond_count),
                "path_count": str(self.path_count), "path_length": str(self.path_length)}


@dataclass
class GenerationStats:
    """풀 세대별 요약"""
    generation: int
    mean: float
    se: float

    @property
    def drift_ok(self) -> bool:
        return abs(self.mean - 1.0) <= 4.0 * self.se if self.se > 0 else self.mean == 1.0


@dataclass
class SamplePool:
    """개체군 동역학 풀"""
    generation: int
    samples: np.ndarray
    seed: int
    b: int
    s: int
    history: List[GenerationStats] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])

    def lineage(self) -> dict:
        return {"seed": self.seed, "b": self.b, "s": self.s, "generation": self.generation,
                "size": self.size}


@dataclass
class EmpiricalMoments:
    """표본 중심 모멘트 + 배치평균 표준오차"""
    m_max: int
    estimates: List[float]
    standard_errors: List[float]
    count: int
    mean: float
    batches: int

    def __getitem__(self, m: int) -> float:
        return self.estimates[m - 2]

    def se(self, m: int) -> float:
        return self.standard_errors[m - 2]

    def to_dict(self) -> dict:
        data = {"count": self.count, "mean": self.mean, "batches": self.batches}
        for m in range(2, self.m_max + 1):
            data[f"rho_{m}"] = self.estimates[m - 2]
            data[f"se_{m}"] = self.standard_errors[m - 2]
        return data
