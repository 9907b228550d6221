"""
Variance Map 테스트
M_b, 역사상, 보조 함수, S_b / D_b / F_b 급수, G_b^{-1}, R_b(r) 래더
"""

import sys
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

# 프로젝트 루트 추가
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest
import sympy

from src.core.exceptions import DomainError, IterationOverflow
from src.core.models import BranchingParams, DEFAULT_POLICY, PrecisionPolicy
from src.numerics import (
    aux_functions, critical_constants, d_product, d_product_partial, f_b, f_series, g_func,
    g_inverse, g_inverse_asymptote, h_b, h_hat_b, m_inverse, m_iterate, m_iterate_mp, m_map,
    r_limit, r_limit_batch, r_limit_derivative, s_series, tilde_coefficients, tilde_map,
)
from src.numerics.auxiliary import h_hat_b_closed, h_hat_b_series, taylor_data
from src.numerics import limits
from src.numerics.extrapolation import extrapolate

B2 = BranchingParams(2)
B3 = BranchingParams(3)


# ==================== 상수 / 사상 ====================

@pytest.mark.parametrize("b, kappa, eta", [
    (2, math.sqrt(2.0), 1.0),
    (3, 1.0, 2.0 / 3.0),
    (5, math.sqrt(0.5), 0.5),
])
def test_critical_constants(b, kappa, eta):
    """κ_b = sqrt(2/(b-1)), η_b = (b+1)/(3(b-1))"""
    constants = critical_constants(BranchingParams(b))
    assert constants.kappa == pytest.approx(kappa, rel=1e-15)
    assert constants.eta == pytest.approx(eta, rel=1e-15)
    assert constants.kappa_sq == Fraction(2, b - 1)


def test_branching_params_validation():
    with pytest.raises(DomainError):
        BranchingParams(1)
    assert not BranchingParams(2, 3).is_critical
    with pytest.raises(DomainError):
        m_inverse(BranchingParams(2, 3), 0.1)


def test_m_map_examples():
    assert m_map(B2, 0.0) == 0.0
    assert m_map(B2, 0.1) == pytest.approx(0.105, rel=1e-14)
    assert m_map(B3, 1.0) == pytest.approx(7.0 / 3.0, rel=1e-14)
    with pytest.raises(DomainError):
        m_map(B2, -0.1)


def test_m_inverse_examples():
    assert m_inverse(B2, 0.105) == pytest.approx(0.1, rel=1e-14)
    assert m_inverse(B2, 0.0) == 0.0
    assert m_inverse(B3, 7.0 / 3.0) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, 1e-8, 1e-3, 0.3, 2.0, 50.0])
def test_marginal_repulsion_and_round_trip(x):
    """M_b(x) >= x (등호는 x=0), M_b(M_b^{-1}(x)) = x"""
    for params in (B2, B3, BranchingParams(5)):
        y = m_map(params, x)
        assert y >= x
        if x > 0:
            assert y > x
        assert abs(m_map(params, m_inverse(params, x)) - x) <= DEFAULT_POLICY.tol_rel * (1 + x)


def test_m_iterate_identity_and_round_trip():
    assert m_iterate(B2, 0.3, 0) == 0.3
    x = 0.37
    assert m_iterate(B2, m_iterate(B2, x, 25), -25) == pytest.approx(x, rel=1e-10)


def test_m_iterate_overflow_reports_progress():
    with pytest.raises(IterationOverflow) as info:
        m_iterate(B2, 1.0, 100)
    assert 0 < info.value.steps_completed < 100


def test_m_iterate_negative_ladder_tends_to_kappa_squared():
    """n·M_b^{-n}(1) → κ_b² = 2 (단조 접근)"""
    gaps = [abs(2 ** k * m_iterate(B2, 1.0, -(2 ** k)) - 2.0) for k in range(8, 15)]
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    assert gaps[-1] < 2e-3


def test_m_iterate_mp_matches_float():
    value = m_iterate_mp(B2, 0.01, 50, bits=256)
    assert float(value) == pytest.approx(m_iterate(B2, 0.01, 50), rel=1e-12)


def test_inverse_sandwich_near_zero():
    """x/(1+a₂x) <= M^{-1}(x) <= x/(1+a₁x), a₁ < 1/κ² < a₂"""
    a1, a2 = 0.45, 0.55
    for x in np.geomspace(1e-6, 1e-2, 20):
        z = m_inverse(B2, x)
        assert x / (1 + a2 * x) <= z <= x / (1 + a1 * x)


# ==================== 보조 함수 ====================

def test_tilde_coefficients_are_exact():
    q = tilde_coefficients(BranchingParams(5))
    assert q == [Fraction(1), Fraction(1), Fraction(1, 2), Fraction(1, 8), Fraction(1, 80)]


@pytest.mark.parametrize("b", [2, 3, 5])
def test_tilde_map_rescales_m_map(b):
    params = BranchingParams(b)
    kappa_sq = float(critical_constants(params).kappa_sq)
    for y in (0.0, 0.05, 0.7, 2.0):
        assert tilde_map(params, y) == pytest.approx(m_map(params, kappa_sq * y) / kappa_sq, rel=1e-13)
    with pytest.raises(DomainError):
        tilde_map(params, -0.1)


@pytest.mark.parametrize("b", [2, 3, 4, 5, 6])
def test_tilde_coefficients_match_sympy_expansion(b):
    y = sympy.symbols("y")
    kappa_sq = sympy.Rational(2, b - 1)
    expanded = sympy.Poly(sympy.expand(((1 + kappa_sq * y) ** b - 1) / (b * kappa_sq)), y)
    expected = [Fraction(int(c.p), int(c.q)) for c in reversed(expanded.all_coeffs()[:-1])]
    assert tilde_coefficients(BranchingParams(b)) == expected


@pytest.mark.parametrize("x", [0.01, 0.3, 1.0])
def test_f_b_vanishes_for_small_b(x):
    assert f_b(B2, x) == 0.0
    assert f_b(B3, x) == 0.0


def test_f_b_degree_one_for_b5():
    """b=5: f_b(x) = 1/8 + x/80"""
    params = BranchingParams(5)
    assert f_b(params, 0.0) == pytest.approx(0.125, rel=1e-15)
    assert f_b(params, 1.0) == pytest.approx(0.125 + 1.0 / 80.0, rel=1e-15)


def test_h_b_identity():
    """y²h_b(y) = 1/M̃(y) + 1 - 1/y - ηy"""
    for params in (B2, B3, BranchingParams(4)):
        eta = critical_constants(params).eta
        q = [float(c) for c in tilde_coefficients(params)]
        for y in (0.001, 0.2, 0.9):
            m_tilde = y * sum(c * y ** k for k, c in enumerate(q))
            expected = (1 / m_tilde + 1 - 1 / y - eta * y) / y ** 2
            assert h_b(params, y) == pytest.approx(expected, rel=1e-7, abs=1e-9)


def test_h_hat_identity():
    """ĥ_b(x)x² = 1 - κ²/x + κ²/M_b(x) - η log(M_b(x)/x)"""
    for params in (B2, B3):
        constants = critical_constants(params)
        kappa_sq, eta = float(constants.kappa_sq), constants.eta
        for x in (0.01, 0.5, kappa_sq):
            mx = m_map(params, x)
            expected = (1 - kappa_sq / x + kappa_sq / mx - eta * math.log(mx / x)) / x ** 2
            assert h_hat_b(params, x) == pytest.approx(expected, rel=1e-8)


def test_h_hat_series_leading_terms_b2():
    """b=2: ĥ(0) = -1/8, ĥ'(0) = 1/12"""
    assert h_hat_b_series(B2, 0.0) == pytest.approx(-0.125, rel=1e-15)
    assert h_hat_b(B2, 1e-7) == pytest.approx(-0.125 + 1e-7 / 12.0, rel=1e-12)


def test_taylor_data_is_exact_rational():
    """b=2: Q = 1 + y, h_b = -1/(1+y), ĥ 급수는 -1/8 + x/12 + ..."""
    data = taylor_data(B2)
    assert data.q == [Fraction(1), Fraction(1)]
    assert data.n3 == [Fraction(-1)]
    assert data.h_series == [Fraction((-1) ** (k + 1)) for k in range(7)]
    assert data.h_hat_series[:2] == [Fraction(-1, 8), Fraction(1, 12)]
    for params in (B3, BranchingParams(4), BranchingParams(5)):
        assert all(isinstance(c, Fraction) for c in taylor_data(params).h_hat_series)


@pytest.mark.parametrize("b", [2, 3, 4, 5])
def test_h_hat_continuity_at_switch(b):
    params = BranchingParams(b)
    x = DEFAULT_POLICY.x_switch
    assert abs(h_hat_b_closed(params, x) - h_hat_b_series(params, x)) <= 10 * DEFAULT_POLICY.tol_abs


def test_aux_functions_domains():
    values = aux_functions(B2, 1.5)
    assert values.h_b is None and values.h_hat_b is not None
    values = aux_functions(B3, 0.5)
    assert values.f_b == 0.0 and values.h_b is not None
    with pytest.raises(DomainError):
        aux_functions(B2, 0.0)
    with pytest.raises(DomainError):
        h_b(B2, 1.5)


# ==================== 급수 ====================

def test_s_series_zero():
    assert s_series(B2, 0.0).value == 0.0


def test_s_series_against_brute_sum():
    """2^16 항 직접 합 + 조잡한 꼬리 κ⁴/s 와 비교"""
    z, total = 0.5, 0.25
    for _ in range(2 ** 16):
        z = m_inverse(B2, z)
        total += z * z
    total += 4.0 / (2.0 / z)
    result = s_series(B2, 0.5)
    assert result.value == pytest.approx(total, rel=1e-7)
    assert result.achieved < DEFAULT_POLICY.series_tail_tol


def test_s_series_is_linear_near_zero():
    ratio = s_series(B2, 1e-4).value / 1e-4
    assert 1.0 < ratio < 3.0


def test_d_product_basics():
    assert d_product(B2, 0.0).value == 0.0
    estimate = d_product(B2, 1.0)
    assert estimate.value > 0
    assert estimate.residual < DEFAULT_POLICY.tol_rel
    # 부분곱은 n 이 커질수록 추정값에 다가간다
    gaps = [abs(d_product_partial(B2, 1.0, 2 ** k) - estimate.value) for k in (8, 10, 12)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_d_product_shift_identity():
    """D_b(M_b(x)) = (1+x)^{b-1} D_b(x)"""
    for params in (B2, B3):
        for x in (0.05, 0.5):
            shifted = d_product(params, m_map(params, x)).value
            expected = (1 + x) ** (params.b - 1) * d_product(params, x).value
            assert shifted == pytest.approx(expected, rel=1e-6)


def test_f_series_linear_near_zero():
    """F_b(x)/x → κ²ĥ(0) = -1/4 (b=2)"""
    ratios = [f_series(B2, 2.0 ** -j) * 2.0 ** j for j in range(6, 12)]
    assert all(abs(r + 0.25) < 0.05 for r in ratios)


def test_f_series_truncation_depths_agree():
    deep = PrecisionPolicy(series_min_terms=2000)
    assert f_series(B2, 1.0, deep) == pytest.approx(f_series(B2, 1.0), abs=1e-10)


def test_f_series_array_matches_scalar():
    xs = np.array([0.05, 0.2, 0.9])
    values = f_series(B3, xs)
    for x, v in zip(xs, values):
        assert v == pytest.approx(f_series(B3, float(x)), rel=1e-13)


# ==================== G_b ====================

@pytest.mark.parametrize("x", [0.01, 0.1, 0.4])
def test_g_shift_identity(x):
    """G_b(M_b^{-1}(x)) = G_b(x) + 1"""
    assert g_func(B2, m_inverse(B2, x)) - g_func(B2, x) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("y", [10.0, 50.0, 200.0])
def test_g_inverse_round_trip(y):
    assert g_func(B2, g_inverse(B2, y)) == pytest.approx(y, rel=1e-10)


def test_g_inverse_asymptote_remainder():
    """잔차 · y³/log²y 유계"""
    scaled = []
    for y in (50.0, 100.0, 200.0, 400.0):
        remainder = abs(g_inverse(B2, y) - g_inverse_asymptote(B2, y))
        scaled.append(remainder * y ** 3 / math.log(y) ** 2)
    assert max(scaled) < 10.0


def test_g_inverse_rejects_small_y():
    with pytest.raises(DomainError):
        g_inverse(B2, -1e6)


# ==================== 외삽 ====================

def test_extrapolate_recovers_model_limit():
    ns = np.array([2.0 ** k for k in range(8, 16)])
    values = 1.5 + (0.3 * np.log(ns) ** 2 - 2.0 * np.log(ns) + 0.7) / ns
    estimate, residual = extrapolate(ns, values)
    assert estimate == pytest.approx(1.5, abs=1e-10)
    assert residual < 1e-10


def test_extrapolate_single_point():
    estimate, residual = extrapolate([256], [0.3])
    assert estimate == 0.3 and math.isinf(residual)


# ==================== R_b(r) ====================

@pytest.mark.slow
@pytest.mark.parametrize("b", [2, 3])
def test_r_limit_shift_equation(b):
    params = BranchingParams(b)
    grid = [float(r) for r in range(-10, 3)]
    estimates = r_limit_batch(params, grid)
    for low, high in zip(estimates, estimates[1:]):
        assert abs(m_map(params, low.value) - high.value) <= 1e-6


@pytest.mark.slow
def test_r_limit_asymptotic_remainder_is_bounded():
    """b=2: |R(r) - (κ²/|r| + κ²η log|r|/r²)|·|r|³/log²|r| 는 유계"""
    assert g_inverse_asymptote(B2, 100.0) == pytest.approx(0.020921034, rel=1e-8)
    scaled = []
    for r in (-50.0, -100.0, -200.0):
        y = -r
        remainder = r_limit(B2, r).value - g_inverse_asymptote(B2, y)
        scaled.append(remainder * y ** 3 / math.log(y) ** 2)
    assert scaled[1] == pytest.approx(1.67, abs=0.05)
    assert all(0.5 < s < 4.0 for s in scaled)
    assert max(scaled) / min(scaled) < 1.5


# ==================== 래더 캐시 ====================

def test_ladder_memo_key_tracks_tolerances():
    loose = PrecisionPolicy(ladder_max_exponent=10, cross_tol=1e-2)
    strict = PrecisionPolicy(ladder_max_exponent=10, cross_tol=1e-6, tol_rel=1e-12)
    assert limits._memo_key(B2, -1.0, loose) != limits._memo_key(B2, -1.0, strict)
    limits.clear_cache()
    first = r_limit_batch(B2, [-1.0], loose)[0]
    second = r_limit_batch(B2, [-1.0], strict)[0]
    assert first is not second
    assert first.value == second.value
    assert len(limits._memo) == 2


def test_ladder_memo_concurrent_batches_agree():
    policy = PrecisionPolicy(ladder_max_exponent=10)
    limits.clear_cache()
    r_values = [-3.0, -2.0, -1.0]
    with ThreadPoolExecutor(max_workers=4) as executor:
        results = list(executor.map(lambda _: r_limit_batch(B2, r_values, policy), range(8)))
    for batch in results[1:]:
        assert [e.value for e in batch] == [e.value for e in results[0]]
    assert len(limits._memo) == len(r_values)


@pytest.mark.slow
@pytest.mark.parametrize("r", [-200.0, -50.0, -5.0])
def test_r_limit_two_routes(r):
    assert abs(r_limit(B2, r).value - g_inverse(B2, -r)) <= DEFAULT_POLICY.cross_tol


@pytest.mark.slow
def test_r_limit_super_exponential_growth():
    values = [e.value for e in r_limit_batch(B2, [0.0, 1.0, 2.0])]
    for low, high in zip(values, values[1:]):
        assert high / low >= (1 + low) / 2


@pytest.mark.slow
def test_r_limit_derivative_against_finite_difference():
    h = 1e-3
    finite = (r_limit(B2, -20.0 + h).value - r_limit(B2, -20.0 - h).value) / (2 * h)
    assert r_limit_derivative(B2, -20.0) == pytest.approx(finite, rel=1e-4)


@pytest.mark.slow
def test_r_limit_derivative_leading_order_and_sign():
    for r in (-200.0, -50.0, -10.0, 0.0):
        assert r_limit_derivative(B2, r) > 0
    assert r_limit_derivative(B2, -200.0) * 200.0 ** 2 / 2.0 == pytest.approx(1.0, rel=0.1)
