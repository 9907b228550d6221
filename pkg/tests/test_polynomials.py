"""
Moment Recursion Polynomials 테스트
P_m 생성, U_m/V_m 분해, 구조 검사, 컴파일 평가
"""

import sys
from fractions import Fraction
from pathlib import Path

# 프로젝트 루트 추가
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest
import sympy

from src.core.exceptions import CapExceededError, DomainError, StructureError
from src.moments import (
    CompiledSystem, SparsePolynomial, build_pm, build_system, leading_coefficient_check,
    split_uv, structure_report,
)

F = Fraction


def poly(nvars, terms):
    return SparsePolynomial(nvars, terms)


# ==================== SparsePolynomial ====================

def test_arithmetic_drops_zero_terms():
    y2 = SparsePolynomial.variable(2, 2)
    y3 = SparsePolynomial.variable(2, 3)
    expression = (y2 + y3) * (y2 - y3)
    assert expression == poly(2, {(2, 0): 1, (0, 2): -1})
    assert (expression - expression).is_zero()
    assert (y2 ** 3).degree() == 3
    assert (1 - y2).constant_term() == 1


def test_variable_range_and_shape_checks():
    with pytest.raises(DomainError):
        SparsePolynomial.variable(2, 4)
    with pytest.raises(DomainError):
        SparsePolynomial(2, {(1,): 1})
    with pytest.raises(DomainError):
        SparsePolynomial.variable(2, 2) + SparsePolynomial.variable(3, 2)


def test_weight_and_sorted_terms():
    p = poly(3, {(0, 0, 1): 2, (1, 1, 0): 3, (2, 0, 0): 1})
    assert SparsePolynomial.weight((1, 1, 0)) == 5
    assert p.min_weight() == 4
    assert [e for e, _ in p.sorted_terms()] == [(0, 0, 1), (1, 1, 0), (2, 0, 0)]


def test_diff_substitute_and_divide():
    p = poly(2, {(2, 1): F(3, 2), (0, 1): 1})
    assert p.diff(2) == poly(2, {(1, 1): 3})
    assert p.diff(3) == poly(2, {(2, 0): F(3, 2), (0, 0): 1})
    assert p.substitute({2: 2}) == poly(2, {(0, 1): 7})
    quotient, remainder = (p + poly(2, {(1, 0): 5})).divide_by_variable(3)
    assert quotient == poly(2, {(2, 0): F(3, 2), (0, 0): 1})
    assert remainder == poly(2, {(1, 0): 5})


def test_exact_and_compiled_evaluation_agree():
    pm = build_pm(3, 5)
    point = [F(1, 10), F(-1, 50), F(1, 30), F(1, 200)]
    exact = pm.evaluate(point)
    assert isinstance(exact, Fraction)
    compiled = CompiledSystem([pm, pm.diff(2)])
    values = compiled.evaluate(np.array([[float(v) for v in point]] * 3))
    assert values.shape == (3, 2)
    assert values[1, 0] == pytest.approx(float(exact), rel=1e-14)
    assert values[2, 1] == pytest.approx(float(pm.diff(2).evaluate(point)), rel=1e-14)


def test_json_document_shape():
    pm = build_pm(2, 3)
    document = pm.to_json_dict(2, 3)
    assert document["b"] == 2 and document["m"] == 3
    assert document["terms"][0] == {"exp": [0, 1], "coef": "1/2"}
    assert SparsePolynomial.from_json_dict(document) == pm


def test_to_sympy():
    y2, y3 = sympy.symbols("y2 y3")
    expression = build_pm(2, 3).to_sympy([y2, y3])
    expected = y3 / 2 + sympy.Rational(3, 2) * y2 ** 2 + sympy.Rational(3, 2) * y2 * y3 + y3 ** 2 / 4
    assert sympy.expand(expression - expected) == 0


# ==================== P_m ====================

@pytest.mark.parametrize("b", [2, 3, 4, 5])
def test_p2_is_variance_map(b):
    y2 = SparsePolynomial.variable(1, 2)
    assert build_pm(b, 2) == ((1 + y2) ** b - 1) * F(1, b)


def test_p3_b2_closed_form():
    """b=2: P_3 = ½y₃ + 3/2 y₂² + 3/2 y₂y₃ + ¼y₃²"""
    expected = poly(2, {(0, 1): F(1, 2), (2, 0): F(3, 2), (1, 1): F(3, 2), (0, 2): F(1, 4)})
    assert build_pm(2, 3) == expected


def test_split_uv_b2_m3():
    u_part, v_part = split_uv(build_pm(2, 3), 2, 3)
    assert u_part == poly(2, {(1, 0): F(3, 2), (0, 1): F(1, 4)})
    assert v_part == poly(2, {(2, 0): F(3, 2)})


def test_split_uv_rejects_constant_term():
    broken = build_pm(2, 4) + 1
    with pytest.raises(StructureError):
        split_uv(broken, 2, 4)


@pytest.mark.parametrize("b", [2, 3])
@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8])
def test_structure_report_passes(b, m):
    report = structure_report(build_pm(b, m), b, m)
    assert report.passed, report.to_dict()
    assert report.unique_linear and report.no_constant and report.nonnegative


def test_structure_report_flags_constant_term():
    report = structure_report(build_pm(2, 4) + F(1, 1000), 2, 4)
    assert not report.no_constant
    assert not report.passed
    assert report.findings


@pytest.mark.parametrize("b, m", [(2, 4), (3, 4), (2, 6)])
def test_leading_coefficient(b, m):
    assert leading_coefficient_check(b, m) == 0


def test_leading_coefficient_needs_even_m():
    with pytest.raises(DomainError):
        leading_coefficient_check(2, 5)


def test_caps():
    with pytest.raises(DomainError):
        build_pm(1, 3)
    with pytest.raises(CapExceededError):
        build_pm(7, 3)
    with pytest.raises(CapExceededError):
        build_pm(2, 13)


# ==================== 시스템 ====================

def test_build_system_shares_variables_and_caches():
    system = build_system(2, 5)
    assert system is build_system(2, 5)
    assert all(p.nvars == 4 for p in system.polynomials)
    assert system.pm(3) == build_pm(2, 3).extend(4)


def test_build_system_hook_bypasses_cache():
    def add_constant(m, polynomial):
        return polynomial + 1 if m == 3 else polynomial

    hooked = build_system(2, 4, add_constant)
    assert hooked is not build_system(2, 4)
    assert hooked.pm(3).constant_term() == 1
    assert hooked.pm(4) == build_system(2, 4).pm(4)
