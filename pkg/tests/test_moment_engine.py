"""
Moment Engine 테스트
모멘트 반복, 극한 모멘트 (래더 / 프로파일 / 급수), 도함수, 점근 스캔, 이분법
"""

import sys
import math
from fractions import Fraction
from pathlib import Path

# 프로젝트 루트 추가
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import pytest
from loguru import logger

from src.core.exceptions import DomainError, IterationOverflow, SeriesDivergedError
from src.core.models import BranchingParams, LimitRow, LimitTable, MomentVector, PrecisionPolicy
from src.disorder import DisorderModel, initial_moments
from src.moments import (
    asymptotics_scan, dichotomy_scan, gaussian_constant, is_bounded, iterate_moments,
    limit_moments, limit_moments_batch, limit_moments_profile, limit_moments_series,
    moment_bound_ratio, moment_derivatives, moment_profile, moment_trajectory, series_terms,
    shifted_table,
)
from src.moments.analysis import DIVERGING, MARGINAL, VANISHING
from src.numerics import critical_constants, m_iterate, r_limit, r_limit_derivative

GAUSSIAN = DisorderModel.parse("gaussian")


# ==================== 반복 ====================

def test_iterate_zero_steps_is_identity():
    init = MomentVector([0.1, 0.01, 0.02])
    assert iterate_moments(2, 4, init, 0).values == [0.1, 0.01, 0.02]


def test_iterate_exact_one_step():
    """b=2: (1/10, 1/100) → (21/200, 861/40000)"""
    init = MomentVector([Fraction(1, 10), Fraction(1, 100)], exact=True)
    result = iterate_moments(2, 3, init, 1)
    assert result.exact
    assert result.values == [Fraction(21, 200), Fraction(861, 40000)]


def test_iterate_float_matches_exact():
    init = MomentVector([Fraction(1, 20), Fraction(1, 300), Fraction(1, 400)], exact=True)
    exact = iterate_moments(3, 4, init, 6)
    approximate = iterate_moments(3, 4, MomentVector([float(v) for v in init.values]), 6)
    for a, c in zip(approximate.values, exact.values):
        assert a == pytest.approx(float(c), rel=1e-13)


def test_iterate_variance_component_follows_map():
    init = MomentVector([0.02, 0.001, 0.003])
    result = iterate_moments(2, 4, init, 40)
    assert result[2] == pytest.approx(m_iterate(BranchingParams(2), 0.02, 40), rel=1e-12)


def test_iterate_overflow():
    with pytest.raises(IterationOverflow) as info:
        iterate_moments(2, 3, MomentVector([1.0, 0.0]), 100)
    assert info.value.steps_completed < 100


def test_iterate_needs_enough_components():
    with pytest.raises(DomainError):
        iterate_moments(2, 5, MomentVector([0.1, 0.0]), 3)


def test_trajectory_ends_at_iterate():
    init = initial_moments(GAUSSIAN, 0.1, 4)
    vectors = list(moment_trajectory(2, 4, init, 25))
    assert len(vectors) == 25
    np.testing.assert_allclose(vectors[-1], iterate_moments(2, 4, init, 25).as_array(), rtol=1e-14)


# ==================== 프로파일 ====================

def test_moment_profile_basics():
    assert not np.any(moment_profile(2, 4, 0.0))
    profile = moment_profile(2, 4, 0.05)
    assert profile[0] == 0.05
    assert np.all(profile > 0)
    with pytest.raises(DomainError):
        moment_profile(2, 4, -0.1)


def test_shifted_table_satisfies_recursion():
    from src.moments import build_system
    table = shifted_table(2, 4, -6.0, depth=5, r2=0.3)
    system = build_system(2, 4)
    for k in range(1, 6):
        lower, upper = table.get(-6.0 - k), table.get(-6.0 - k + 1)
        for m in (3, 4):
            assert float(system.pm(m).evaluate(lower.values)) == pytest.approx(upper[m], rel=1e-12)
    assert table.is_monotone()


def test_profile_increases_with_variance():
    low, high = moment_profile(3, 5, 0.02), moment_profile(3, 5, 0.04)
    assert np.all(high[:3] > low[:3])


# ==================== 급수 경로 ====================

@pytest.mark.slow
def test_series_route_matches_profile():
    r = -10.0
    profile = limit_moments_profile(2, 4, r)
    table = LimitTable(b=2, m_max=4)
    for m in (3, 4):
        series = limit_moments_series(2, m, r, table)
        assert series == pytest.approx(profile[m], rel=1e-6)


def test_series_terms_are_positive():
    terms = series_terms(2, 3, -10.0, LimitTable(b=2, m_max=3))
    assert len(terms) >= 200
    assert all(t >= 0 for t in terms)


def test_series_diverged_product():
    table = LimitTable(b=2, m_max=3)
    table.add(LimitRow(r=-1.0, values=[5.0, 5.0]))
    with pytest.raises(SeriesDivergedError):
        series_terms(2, 3, 0.0, table)


def test_series_route_needs_m3():
    with pytest.raises(DomainError):
        series_terms(2, 2, -5.0, LimitTable(b=2, m_max=3))


# ==================== 래더 경로 ====================

@pytest.mark.slow
def test_ladder_variance_matches_r_limit():
    row = limit_moments(2, 4, GAUSSIAN, -5.0)
    assert row.converged
    assert row[2] == pytest.approx(r_limit(BranchingParams(2), -5.0).value, rel=1e-4)


@pytest.mark.slow
def test_ladder_matches_profile():
    ladder = limit_moments_batch(2, 4, GAUSSIAN, [-8.0, -4.0])
    for row in ladder:
        profile = limit_moments_profile(2, 4, row.r)
        for m in (3, 4):
            assert row[m] == pytest.approx(profile[m], rel=1e-3)


@pytest.mark.slow
def test_ladder_rows_are_shift_consistent_and_increasing():
    from src.moments import build_system
    rows = limit_moments_batch(2, 4, GAUSSIAN, [-3.0, -2.0, -1.0])
    table = LimitTable(b=2, m_max=4)
    for row in rows:
        table.add(row)
    assert table.is_monotone()
    system = build_system(2, 4)
    for low, high in zip(rows, rows[1:]):
        for m in (2, 3, 4):
            assert float(system.pm(m).evaluate(low.values)) == pytest.approx(high[m], rel=1e-4)


@pytest.mark.slow
def test_ladder_model_independence():
    gaussian = limit_moments(2, 3, GAUSSIAN, -5.0)
    rademacher = limit_moments(2, 3, DisorderModel.parse("rademacher"), -5.0)
    for m in (2, 3):
        assert gaussian[m] == pytest.approx(rademacher[m], rel=1e-3)


def test_ladder_overflow_is_reported_mid_ladder():
    """r=50 은 첫 래더 점 (n=2^8) 안에서 overflow, 나머지 r 은 영향 없음"""
    policy = PrecisionPolicy(ladder_max_exponent=10)
    blown, finite = limit_moments_batch(2, 3, GAUSSIAN, [50.0, -2.0], policy)
    assert blown.note == "overflow" and not blown.converged
    assert 0 < blown.converged_n < 256
    assert all(math.isfinite(v) and v > 0 for v in finite.values)
    with pytest.raises(IterationOverflow) as info:
        limit_moments(2, 3, GAUSSIAN, 50.0, policy)
    assert info.value.steps_completed == blown.converged_n


# ==================== 도함수 ====================

def test_moment_derivatives_variance_only():
    derivative = moment_derivatives(2, 2, -10.0)
    assert derivative.shape == (1,)
    assert derivative[0] == r_limit_derivative(BranchingParams(2), -10.0)


@pytest.mark.slow
def test_moment_derivatives_against_finite_differences():
    r, h = -12.0, 1e-3
    derivative = moment_derivatives(2, 4, r)
    upper, lower = limit_moments_profile(2, 4, r + h), limit_moments_profile(2, 4, r - h)
    for m in (3, 4):
        finite = (upper[m] - lower[m]) / (2 * h)
        assert derivative[m - 2] == pytest.approx(finite, rel=1e-3)
        assert derivative[m - 2] > 0


# ==================== 점근 / 유계성 ====================

@pytest.mark.parametrize("b, expected", [(2, [2.0, 12.0, 120.0]), (3, [1.0, 3.0, 15.0])])
def test_gaussian_constant(b, expected):
    assert [gaussian_constant(b, m) for m in (2, 4, 6)] == pytest.approx(expected, rel=1e-15)
    with pytest.raises(DomainError):
        gaussian_constant(b, 3)


def test_is_bounded_verdicts():
    assert is_bounded([1.0, 1.5, 1.75, 1.875])
    assert is_bounded([1.0, 1.01, 1.02, 1.03])
    assert not is_bounded([1.0, 2.0, 4.0, 8.0])
    assert not is_bounded([1.0, math.inf])
    assert is_bounded([])


def test_asymptotics_scan_needs_negative_r():
    with pytest.raises(DomainError):
        asymptotics_scan(2, 4, [-10.0, -2.0])
    with pytest.raises(DomainError):
        asymptotics_scan(2, 4, [-10.0], route="other")


@pytest.mark.slow
def test_asymptotics_scan_profile_route():
    report = asymptotics_scan(2, 6, [-50, -100, -200, -400])
    logger.info(f"gaussian ratios: {report.gaussian_ratio}")
    assert report.gaussian_ratio[4] == pytest.approx(1.0, abs=0.05)
    assert report.gaussian_ratio[6] == pytest.approx(1.0, abs=0.10)
    assert report.bounded[3] and report.bounded[5]
    assert is_bounded(report.variance_remainder)
    assert set(report.to_dict()["scaled"]) == {"2", "3", "4", "5", "6"}


def test_moment_bound_ratio_variance_is_one():
    assert moment_bound_ratio(2, 2, GAUSSIAN, -10.0, 256) == 1.0


@pytest.mark.parametrize("m, plateau", [(3, 2.007), (4, 12.655)])
def test_moment_bound_ratio_has_no_growth_trend(m, plateau):
    """b=2, r=-10: max_k |ρ^(m)|/(ρ^(2))^{m/2} 는 n = 2^8..2^16 에서 평탄"""
    ratios = [moment_bound_ratio(2, m, GAUSSIAN, -10.0, 2 ** k) for k in (8, 10, 12, 14, 16)]
    assert all(math.isfinite(v) and 0 < v < 20 for v in ratios)
    assert ratios[-1] / ratios[0] <= 1.05
    assert ratios[-1] == pytest.approx(plateau, abs=0.01 * plateau)


# ==================== 이분법 ====================

@pytest.mark.parametrize("b", [2, 3])
def test_dichotomy_classes(b):
    kappa = critical_constants(BranchingParams(b)).kappa
    report = dichotomy_scan(b, [0.9 * kappa, kappa, 1.1 * kappa], [2 ** 12, 2 ** 14])
    assert report.verdict(0.9 * kappa) == VANISHING
    assert report.verdict(kappa) == MARGINAL
    assert report.verdict(1.1 * kappa) == DIVERGING
    # 아래쪽은 1/n 로 줄어든다
    small = report.finals[float(0.9 * kappa)]
    assert small[1] == pytest.approx(small[0] / 4, rel=0.1)
