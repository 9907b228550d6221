"""
DPM (Diamond Polymer Moments) - Moment Recursion Polynomials
중심 모멘트 점화식 다항식 P_m 생성과 U_m / V_m 분해
"""

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import sympy
from loguru import logger
from typing_extensions import TypeAlias

from src.core.exceptions import CapExceededError, DomainError, StructureError
from src.moments.polynomial import FIRST_VARIABLE, SparsePolynomial

MAX_B = 6
MAX_M = 12

PolynomialHook: TypeAlias = Callable[[int, SparsePolynomial], SparsePolynomial]


def _check_cap(b: int, m: int) -> None:
    if b < 2 or m < 2:
        raise DomainError(f"build_pm needs b >= 2 and m >= 2, got b={b}, m={m}", value=(b, m))
    if b > MAX_B or m > MAX_M:
        raise CapExceededError(f"(b={b}, m={m}) beyond the practical cap b <= {MAX_B}, m <= {MAX_M}",
                               required=m, budget=MAX_M)


def _partitions(total: int, max_parts: int, smallest: int = 2, largest: Optional[int] = None):
    """total 을 smallest 이상 부분 max_parts 개 이하로 나누는 분할 (내림차순)"""
    largest = total if largest is None else largest
    if total == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for part in range(min(total, largest), smallest - 1, -1):
        for rest in _partitions(total - part, max_parts - 1, smallest, part):
            yield (part,) + rest


def _arrangements(parts: Tuple[int, ...], b: int) -> int:
    """b 개 가지에 부분(+0)을 배치하는 경우의 수"""
    counts: Dict[int, int] = {}
    for part in parts:
        counts[part] = counts.get(part, 0) + 1
    denominator = math.factorial(b - len(parts))
    for count in counts.values():
        denominator *= math.factorial(count)
    return math.factorial(b) // denominator


def build_pm(b: int, m: int) -> SparsePolynomial:
    """
    P_m(y_2, ..., y_m) 생성

    μ_k = Σ_i C(k,i) y_i (y_0=1, y_1=0) 는 가지 하나 W 의 k 차 원모멘트,
    e_p = Σ_k C(p,k)(-1)^{p-k} μ_k^b 는 (ΠW - 1) 의 p 차 모멘트,
    P_m = b^{-m} Σ_{p_1+..+p_b=m} multinomial(m; p) Π e_{p_i} (e_1 = 0)
    """
    _check_cap(b, m)
    nvars = m - 1
    one = SparsePolynomial.constant(nvars, 1)

    def y(order: int) -> SparsePolynomial:
        if order == 0:
            return one
        if order == 1:
            return SparsePolynomial.zero(nvars)
        return SparsePolynomial.variable(nvars, order)

    mu = []
    for k in range(m + 1):
        total = SparsePolynomial.zero(nvars)
        for i in range(k + 1):
            total = total + math.comb(k, i) * y(i)
        mu.append(total)
    mu_powers = [p ** b for p in mu]

    e = []
    for p in range(m + 1):
        total = SparsePolynomial.zero(nvars)
        for k in range(p + 1):
            total = total + (math.comb(p, k) * (-1) ** (p - k)) * mu_powers[k]
        e.append(total)
    if not e[1].is_zero():
        raise StructureError("first centered moment of a branch product is not zero", m=m)

    result = SparsePolynomial.zero(nvars)
    for parts in _partitions(m, b):
        multinomial = math.factorial(m)
        for part in parts:
            multinomial //= math.factorial(part)
        product = one
        for part in parts:
            product = product * e[part]
        result = result + (multinomial * _arrangements(parts, b)) * product

    result = result * Fraction(1, b ** m)
    logger.debug(f"build_pm(b={b}, m={m}): {len(result)} terms, degree {result.degree()}")
    return result


# ==================== 시스템 캐시 ====================

@dataclass
class MomentSystem:
    """공통 변수 y_2..y_{m_max} 위의 P_2..P_{m_max}"""
    b: int
    m_max: int
    polynomials: List[SparsePolynomial]          # 인덱스 0 ↔ P_2

    def pm(self, m: int) -> SparsePolynomial:
        return self.polynomials[m - 2]


_system_cache: Dict[Tuple[int, int], MomentSystem] = {}
_system_lock = threading.Lock()


def build_system(b: int, m_max: int, hook: Optional[PolynomialHook] = None) -> MomentSystem:
    """P_2..P_{m_max} (hook 이 있으면 캐시를 쓰지 않음)"""
    if hook is None:
        cached = _system_cache.get((b, m_max))
        if cached is not None:
            return cached

    polynomials = []
    for m in range(2, m_max + 1):
        polynomial = build_pm(b, m)
        if hook is not None:
            polynomial = hook(m, polynomial)
        polynomials.append(polynomial.extend(m_max - 1))
    system = MomentSystem(b=b, m_max=m_max, polynomials=polynomials)

    if hook is None:
        with _system_lock:
            system = _system_cache.setdefault((b, m_max), system)
    return system


# ==================== U / V 분해 ====================

def split_uv(pm: SparsePolynomial, b: int, m: int) -> Tuple[SparsePolynomial, SparsePolynomial]:
    """
    P_m = (1/b^{m-2}) y_m + y_m U_m + V_m

    Raises:
        StructureError: 선형항/상수항 구조가 맞지 않을 때
    """
    if pm.nvars < m - 1:
        raise DomainError(f"P_{m} must carry variables up to y_{m}")
    leading = Fraction(1, b ** (m - 2))
    y_m = SparsePolynomial.variable(pm.nvars, m)

    with_m, v_part = pm.split_on(m)
    remainder = with_m - leading * y_m
    u_part, leftover = remainder.divide_by_variable(m)

    if not leftover.is_zero():
        raise StructureError(f"P_{m} - V_{m} - y_{m}/b^{m - 2} is not divisible by y_{m}", m=m)
    if u_part.constant_term() != 0:
        raise StructureError(f"linear coefficient of y_{m} in P_{m} is not 1/b^{m - 2}", m=m)
    if v_part.constant_term() != 0 or v_part.linear_terms():
        raise StructureError(f"V_{m} has constant or linear terms", m=m)
    return u_part, v_part


# ==================== 구조 검사 ====================

@dataclass
class StructureReport:
    """P_m 구조 검사 결과"""
    b: int
    m: int
    term_count: int
    degree: int
    expected_degree: int
    no_constant: bool
    unique_linear: bool
    nonnegative: bool
    v_weight_ok: bool
    u_weight_ok: bool
    findings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all((self.no_constant, self.unique_linear, self.nonnegative,
                    self.v_weight_ok, self.u_weight_ok))

    def to_dict(self) -> dict:
        return {
            "b": self.b, "m": self.m, "term_count": self.term_count, "degree": self.degree,
            "expected_degree": self.expected_degree, "no_constant": self.no_constant,
            "unique_linear": self.unique_linear, "nonnegative": self.nonnegative,
            "v_weight_ok": self.v_weight_ok, "u_weight_ok": self.u_weight_ok,
            "passed": self.passed, "findings": list(self.findings),
        }


def structure_report(pm: SparsePolynomial, b: int, m: int) -> StructureReport:
    """상수항, 선형항, 부호, 가중치, 차수 검사 (차수 불일치는 finding 으로만 기록)"""
    findings = []
    linear = pm.linear_terms()
    unique_linear = linear == {m: Fraction(1, b ** (m - 2))}
    expected_degree = b * min(b, m // 2)
    degree = pm.degree()
    if degree != expected_degree:
        findings.append(f"degree {degree} differs from b*min(b, m//2) = {expected_degree}")
        logger.warning(f"P_{m} (b={b}): {findings[-1]}")

    try:
        u_part, v_part = split_uv(pm, b, m)
        v_bound = m if m % 2 == 0 else m + 1
        v_weight_ok = v_part.is_zero() or v_part.min_weight() >= v_bound
        ym_u = u_part * SparsePolynomial.variable(pm.nvars, m)
        u_weight_ok = ym_u.is_zero() or ym_u.min_weight() >= m + 2
    except StructureError as e:
        findings.append(str(e))
        v_weight_ok = u_weight_ok = False

    return StructureReport(
        b=b, m=m, term_count=len(pm), degree=degree, expected_degree=expected_degree,
        no_constant=pm.constant_term() == 0, unique_linear=unique_linear,
        nonnegative=all(c > 0 for c in pm.terms.values()),
        v_weight_ok=v_weight_ok, u_weight_ok=u_weight_ok, findings=findings,
    )


def leading_coefficient_check(b: int, m: int) -> Fraction:
    """
    y_{2j} = c_{2j} x^j, 홀수 y_j = d_j x^{(j+1)/2} 대입 후 V_m 의 x^{m/2} 계수와
    (1/b^m) d^m/dt^m (1 + Σ c_{2j} t^{2j}/(2j)!)^{b²} |_{t=0} 의 차이

    Returns:
        0 이면 일치, 아니면 차이 다항식 계수 절댓값 합
    """
    if m % 2:
        raise DomainError(f"leading_coefficient_check needs even m, got {m}", value=m)
    _, v_part = split_uv(build_pm(b, m), b, m)

    x, t = sympy.symbols("x t")
    substitutions = []
    for order in range(FIRST_VARIABLE, m + 1):
        if order % 2 == 0:
            substitutions.append(sympy.Symbol(f"c{order}") * x ** (order // 2))
        else:
            substitutions.append(sympy.Symbol(f"d{order}") * x ** ((order + 1) // 2))

    expression = sympy.expand(v_part.to_sympy(substitutions))
    coefficient = sympy.Poly(expression, x).coeff_monomial(x ** (m // 2))

    generating = 1 + sum(sympy.Symbol(f"c{2 * j}") * t ** (2 * j) / sympy.factorial(2 * j)
                         for j in range(1, m // 2))
    target = sympy.diff(generating ** (b * b), t, m).subs(t, 0) / sympy.Integer(b) ** m

    difference = sympy.expand(coefficient - target)
    if difference == 0:
        return Fraction(0)
    symbols = sorted(difference.free_symbols, key=str)
    coefficients = sympy.Poly(difference, *symbols).coeffs() if symbols else [difference]
    total = sum(abs(sympy.Rational(c)) for c in coefficients)
    return Fraction(int(total.p), int(total.q))
