"""
DPM (Diamond Polymer Moments) - Variance Map
분산 사상 M_b, 역사상, 반복 합성
"""

import math
from fractions import Fraction
from typing import List

import mpmath
import numpy as np
from loguru import logger

from src.core.exceptions import DomainError, IterationOverflow
from src.core.models import BranchingParams, CriticalConstants


def critical_constants(params: BranchingParams) -> CriticalConstants:
    """κ_b = sqrt(2/(b-1)), η_b = (b+1)/(3(b-1))"""
    b = params.b
    return CriticalConstants(b=b, kappa_sq=Fraction(2, b - 1), eta_exact=Fraction(b + 1, 3 * (b - 1)))


def _check_nonnegative(x: float, operation: str) -> float:
    x = float(x)
    if not x >= 0:
        raise DomainError(f"{operation}: x must be >= 0, got {x}", value=x)
    if math.isinf(x):
        raise DomainError(f"{operation}: x must be finite", value=x)
    return x


# ==================== 스칼라 ====================

def m_map(params: BranchingParams, x: float) -> float:
    """M_{b,s}(x) = ((1+x)^s - 1)/b"""
    x = _check_nonnegative(x, "m_map")
    try:
        return math.expm1(params.s * math.log1p(x)) / params.b
    except OverflowError:
        raise IterationOverflow(f"m_map overflow at x={x}", steps_completed=0)


def m_inverse(params: BranchingParams, x: float) -> float:
    """M_b^{-1}(x) = (1+bx)^{1/b} - 1 (임계)"""
    params.require_critical("m_inverse")
    x = _check_nonnegative(x, "m_inverse")
    b = params.b
    return math.expm1(math.log1p(b * x) / b)


def m_iterate(params: BranchingParams, x: float, n: int) -> float:
    """
    n 회 합성 (n>0: M_b, n<0: M_b^{-1}, n=0: 항등)

    범위를 벗어나면 IterationOverflow (steps_completed 포함)
    """
    x = _check_nonnegative(x, "m_iterate")
    if n < 0:
        params.require_critical("m_iterate(n<0)")
        b = params.b
        for _ in range(-n):
            x = math.expm1(math.log1p(b * x) / b)
        return x

    s, b = params.s, params.b
    for step in range(n):
        try:
            x = math.expm1(s * math.log1p(x)) / b
        except OverflowError:
            logger.debug(f"m_iterate overflow after {step} steps (b={b})")
            raise IterationOverflow(f"m_iterate overflow after {step} of {n} steps",
                                    steps_completed=step)
        if math.isinf(x):
            raise IterationOverflow(f"m_iterate overflow after {step + 1} of {n} steps",
                                    steps_completed=step + 1)
    return x


def m_iterate_mp(params: BranchingParams, x, n: int, bits: int = 256) -> mpmath.mpf:
    """확장 정밀도 반복 합성 (검증용)"""
    params.require_critical("m_iterate_mp")
    b = params.b
    with mpmath.workprec(bits):
        y = mpmath.mpf(x)
        if n >= 0:
            for _ in range(n):
                y = ((1 + y) ** b - 1) / b
        else:
            for _ in range(-n):
                y = mpmath.root(1 + b * y, b) - 1
        return +y


# ==================== 배열 ====================

def m_map_array(b: int, x: np.ndarray) -> np.ndarray:
    """벡터화 M_b (overflow 는 inf 로 남김, 호출자가 검사)"""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.expm1(b * np.log1p(x)) / b


def m_inverse_array(b: int, x: np.ndarray) -> np.ndarray:
    return np.expm1(np.log1p(b * x) / b)


# ==================== 정확한 Taylor 구조 ====================

def tilde_coefficients(params: BranchingParams) -> List[Fraction]:
    """
    M_b(κ²y)/κ² = y·Q(y) 의 Q 계수 (q_0, ..., q_{b-1})

    q_k = C(b, k+1) κ^{2k} / b, 모두 유리수
    """
    params.require_critical("tilde_coefficients")
    b = params.b
    kappa_sq = critical_constants(params).kappa_sq
    return [Fraction(math.comb(b, k + 1)) * kappa_sq ** k / b for k in range(b)]
