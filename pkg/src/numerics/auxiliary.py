"""
DPM (Diamond Polymer Moments) - Auxiliary Functions
보조 함수 f_b, h_b, ĥ_b 와 정확한 유리수 멱급수 계수
"""

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy
from loguru import logger

from src.core.exceptions import DomainError
from src.core.models import BranchingParams, DEFAULT_POLICY, PrecisionPolicy
from src.numerics.variance_map import critical_constants, tilde_coefficients

SERIES_DEGREE = 6        # ĥ_b 급수 절단 차수
_INTERNAL_DEGREE = 12    # 내부 계산 차수 (절단 전)


# ==================== 유리수 멱급수 (sympy) ====================

_Y = sympy.Symbol("y")


def _to_sympy(coefficients: Sequence[Fraction]) -> sympy.Expr:
    """오름차순 Fraction 계수 → y 다항식"""
    return sum((sympy.Rational(c.numerator, c.denominator) * _Y ** k
                for k, c in enumerate(coefficients)), sympy.Integer(0))


def _from_sympy(expression: sympy.Expr, degree: int) -> List[Fraction]:
    """y 다항식 → 오름차순 Fraction 계수 (degree 까지)"""
    poly = sympy.Poly(expression, _Y)
    out = []
    for k in range(degree + 1):
        c = sympy.Rational(poly.coeff_monomial(_Y ** k))
        out.append(Fraction(int(c.p), int(c.q)))
    return out


def _truncated_series(expression: sympy.Expr, degree: int) -> List[Fraction]:
    """y = 0 근방 전개, y^degree 까지"""
    return _from_sympy(sympy.series(expression, _Y, 0, degree + 1).removeO(), degree)


def _descending(coefficients: Sequence[Fraction]) -> np.ndarray:
    """np.polyval 용 (내림차순 float)"""
    if not coefficients:
        return np.zeros(1)
    return np.array([float(c) for c in reversed(coefficients)], dtype=float)


# ==================== Taylor 데이터 (캐시) ====================

@dataclass(frozen=True)
class TaylorData:
    """
    M_b(κ²y)/κ² = y·Q(y) 로부터 유도한 정확한 계수

    - q: Q 계수 (오름차순)
    - f: f_b 계수, Q = 1 + y + (1-η)y² + y³ f_b(y)
    - n3: N(y)/y³, N = 1 - Q(y)(1 - y + ηy²), h_b = n3/Q
    - h_series: h_b 멱급수 (y)
    - h_hat_series: ĥ_b 멱급수 (x = κ²y)
    """
    b: int
    kappa_sq: Fraction
    eta: Fraction
    q: List[Fraction]
    f: List[Fraction]
    n3: List[Fraction]
    h_series: List[Fraction]
    h_hat_series: List[Fraction]

    @property
    def h_hat0(self) -> float:
        return float(self.h_hat_series[0])

    @property
    def h_hat1(self) -> float:
        return float(self.h_hat_series[1])


_taylor_cache: Dict[int, TaylorData] = {}
_taylor_lock = threading.Lock()


def _build_taylor_data(params: BranchingParams) -> TaylorData:
    constants = critical_constants(params)
    kappa_sq, eta = constants.kappa_sq, constants.eta_exact
    q = tilde_coefficients(params)
    if q[0] != 1 or q[1] != 1 or (len(q) > 2 and q[2] != 1 - eta):
        raise DomainError(f"unexpected Taylor structure for b={params.b}: {q}")

    f = list(q[3:])

    # N = 1 - Q(y)(1 - y + ηy²): 차수 2 이하 계수는 0
    q_expr = _to_sympy(q)
    eta_expr = sympy.Rational(eta.numerator, eta.denominator)
    numerator = sympy.expand(1 - q_expr * (1 - _Y + eta_expr * _Y ** 2))
    n3_expr, remainder = sympy.div(numerator, _Y ** 3, _Y)
    if remainder != 0:
        raise DomainError(f"h_b numerator not O(y^3) for b={params.b}")
    n3 = _from_sympy(n3_expr, max(0, sympy.degree(n3_expr, _Y)))
    while n3 and n3[-1] == 0:
        n3.pop()

    h_series = _truncated_series(n3_expr / q_expr, _INTERNAL_DEGREE)
    log_q = _truncated_series(sympy.log(q_expr), _INTERNAL_DEGREE)

    # ĥ(κ²y) = (1/κ⁴) Σ (h_k - η ℓ_{k+2}) y^k  →  x 변수로 환산
    h_hat_series = []
    for k in range(SERIES_DEGREE + 1):
        coefficient = h_series[k] - eta * log_q[k + 2]
        h_hat_series.append(coefficient / kappa_sq ** (2 + k))

    return TaylorData(b=params.b, kappa_sq=kappa_sq, eta=eta, q=q, f=f, n3=n3,
                      h_series=h_series[:SERIES_DEGREE + 1], h_hat_series=h_hat_series)


def taylor_data(params: BranchingParams) -> TaylorData:
    """b 별 Taylor 데이터 (최초 1회 생성)"""
    params.require_critical("taylor_data")
    data = _taylor_cache.get(params.b)
    if data is not None:
        return data
    with _taylor_lock:
        data = _taylor_cache.get(params.b)
        if data is None:
            data = _build_taylor_data(params)
            _taylor_cache[params.b] = data
            logger.debug(f"Taylor data built for b={params.b}: h_hat(0)={data.h_hat0:.12g}")
    return data


# ==================== 배열 평가 ====================

class _Evaluator:
    """float 계수로 컴파일된 평가기"""

    def __init__(self, data: TaylorData):
        self.kappa_sq = float(data.kappa_sq)
        self.eta = float(data.eta)
        self.q = _descending(data.q)
        self.q_tail = _descending(data.q[1:])   # (Q(y) - 1)/y
        self.f = _descending(data.f)
        self.n3 = _descending(data.n3)
        self.h_series = _descending(data.h_series)
        self.h_hat_series = _descending(data.h_hat_series)

    def h_closed(self, y):
        return np.polyval(self.n3, y) / np.polyval(self.q, y)

    def h_hat_closed(self, x):
        y = x / self.kappa_sq
        log_q = np.log1p(y * np.polyval(self.q_tail, y))
        return (self.h_closed(y) + self.eta * (y - log_q) / (y * y)) / self.kappa_sq ** 2

    def h_hat(self, x, x_switch: float):
        x = np.asarray(x, dtype=float)
        small = x < x_switch
        safe = np.where(small, x_switch, x)
        return np.where(small, np.polyval(self.h_hat_series, x), self.h_hat_closed(safe))

    def h(self, y, x_switch: float):
        y = np.asarray(y, dtype=float)
        small = y < x_switch
        safe = np.where(small, x_switch, y)
        return np.where(small, np.polyval(self.h_series, y), self.h_closed(safe))


_evaluators: Dict[int, _Evaluator] = {}


def evaluator(params: BranchingParams) -> _Evaluator:
    ev = _evaluators.get(params.b)
    if ev is None:
        data = taylor_data(params)
        with _taylor_lock:
            ev = _evaluators.setdefault(params.b, _Evaluator(data))
    return ev


def h_hat_array(params: BranchingParams, x: np.ndarray,
                policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    """ĥ_b 벡터 평가 (도메인 검사 없음, F_b 합산용)"""
    return evaluator(params).h_hat(x, policy.x_switch)


# ==================== 공개 함수 ====================

def tilde_map(params: BranchingParams, y: float) -> float:
    """M̃_b(y) = M_b(κ²y)/κ² = y·Q(y)"""
    y = float(y)
    if not (y >= 0 and math.isfinite(y)):
        raise DomainError(f"tilde_map: y must be finite and >= 0, got {y}", value=y)
    return y * float(np.polyval(evaluator(params).q, y))


def f_b(params: BranchingParams, x: float) -> float:
    """f_b(x): b <= 3 이면 0, 그 외 차수 b-4 다항식"""
    x = float(x)
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"f_b: x must be finite and >= 0, got {x}", value=x)
    return float(np.polyval(evaluator(params).f, x))


def h_b(params: BranchingParams, x: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """h_b(x), x ∈ (0, 1]"""
    x = float(x)
    if not 0 < x <= 1:
        raise DomainError(f"h_b: x must lie in (0, 1], got {x}", value=x)
    return float(evaluator(params).h(x, policy.x_switch))


def h_hat_b(params: BranchingParams, x: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """ĥ_b(x), x ∈ (0, κ_b²]"""
    x = float(x)
    kappa_sq = float(critical_constants(params).kappa_sq)
    if not 0 < x <= kappa_sq:
        raise DomainError(f"h_hat_b: x must lie in (0, {kappa_sq}], got {x}", value=x)
    return float(evaluator(params).h_hat(x, policy.x_switch))


def h_hat_b_closed(params: BranchingParams, x: float) -> float:
    """급수 전환 없이 닫힌 형태로만 평가 (연속성 검사용)"""
    return float(evaluator(params).h_hat_closed(float(x)))


def h_hat_b_series(params: BranchingParams, x: float) -> float:
    """절단 급수로만 평가 (연속성 검사용)"""
    return float(np.polyval(evaluator(params).h_hat_series, float(x)))


@dataclass
class AuxValues:
    """보조 함수 값 (도메인 밖 항목은 None)"""
    x: float
    f_b: float
    h_b: Optional[float]
    h_hat_b: Optional[float]

    def to_dict(self) -> dict:
        return {"x": self.x, "f_b": self.f_b, "h_b": self.h_b, "h_hat_b": self.h_hat_b}


def aux_functions(params: BranchingParams, x: float,
                  policy: PrecisionPolicy = DEFAULT_POLICY) -> AuxValues:
    """f_b, h_b, ĥ_b 를 한 번에 평가"""
    x = float(x)
    kappa_sq = float(critical_constants(params).kappa_sq)
    upper = max(1.0, kappa_sq)
    if not 0 < x <= upper:
        raise DomainError(f"aux_functions: x must lie in (0, {upper}], got {x}", value=x)
    return AuxValues(
        x=x,
        f_b=f_b(params, x),
        h_b=h_b(params, x, policy) if x <= 1 else None,
        h_hat_b=h_hat_b(params, x, policy) if x <= kappa_sq else None,
    )
