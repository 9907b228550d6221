"""
Disorder 테스트
분포 파싱, 로그 적률생성함수, 초기 모멘트, β 스케줄
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

from src.core.exceptions import ConfigurationError, DomainError
from src.disorder import (
    BETA_MAX, CALIBRATED, LITERAL, BetaSchedule, DisorderKind, DisorderModel, beta_schedule,
    exact_initial_moments, exact_support, initial_moment, initial_moments, kurtosis_excess,
    log_mgf, skew, tilted_variance, v_form_check,
)

GAUSSIAN = DisorderModel.parse("gaussian")
RADEMACHER = DisorderModel.parse("rademacher")
UNIFORM = DisorderModel.parse("uniform")


# ==================== 분포 ====================

def test_parse_aliases():
    assert DisorderModel.parse("normal").kind == DisorderKind.STANDARD_GAUSSIAN
    bernoulli = DisorderModel.parse("bernoulli:0.2")
    assert bernoulli.kind == DisorderKind.STANDARDIZED_BERNOULLI and bernoulli.p == 0.2
    assert bernoulli.label == "standardized_bernoulli(0.2)"
    assert DisorderModel.parse("bernoulli").p == 0.5


@pytest.mark.parametrize("text", ["cauchy", "gaussian:1", "bernoulli:x"])
def test_parse_rejects_bad_models(text):
    with pytest.raises(ConfigurationError):
        DisorderModel.parse(text)


def test_bernoulli_parameter_range():
    with pytest.raises(DomainError):
        DisorderModel(DisorderKind.STANDARDIZED_BERNOULLI, p=1.0)


def test_shape_constants():
    assert skew(GAUSSIAN) == 0.0 and skew(RADEMACHER) == 0.0
    assert skew(DisorderModel.parse("bernoulli:0.2")) == pytest.approx(1.5, rel=1e-14)
    assert kurtosis_excess(GAUSSIAN) == 0.0
    assert kurtosis_excess(RADEMACHER) == -2.0
    assert kurtosis_excess(UNIFORM) == pytest.approx(-1.2)
    assert kurtosis_excess(DisorderModel.parse("bernoulli:0.2")) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("text", ["gaussian", "rademacher", "bernoulli:0.2", "uniform"])
def test_samples_are_standardized(text):
    model = DisorderModel.parse(text)
    draws = model.sample(np.random.default_rng(7), 200_000)
    assert abs(draws.mean()) < 0.02
    assert draws.var() == pytest.approx(1.0, abs=0.02)


# ==================== Λ / V_β ====================

def test_log_mgf_closed_forms():
    assert log_mgf(GAUSSIAN, 0.7) == pytest.approx(0.245, rel=1e-14)
    assert log_mgf(RADEMACHER, 0.7) == pytest.approx(math.log(math.cosh(0.7)), rel=1e-14)
    c = math.sqrt(3.0) * 0.7
    assert log_mgf(UNIFORM, 0.7) == pytest.approx(math.log(math.sinh(c) / c), rel=1e-13)
    assert log_mgf(UNIFORM, 1e-5) == pytest.approx(0.5e-10, rel=1e-6)


def test_log_mgf_large_beta_does_not_overflow():
    assert log_mgf(RADEMACHER, 19.0) == pytest.approx(19.0 - math.log(2.0), rel=1e-14)


def test_beta_max_enforced():
    with pytest.raises(DomainError):
        log_mgf(GAUSSIAN, BETA_MAX * 1.01)
    with pytest.raises(DomainError):
        tilted_variance(GAUSSIAN, BETA_MAX * 0.6)


def test_tilted_variance_examples():
    """Rademacher: V_β = tanh²β, 가우시안: V_β = e^{β²} - 1"""
    assert tilted_variance(RADEMACHER, 0.5) == pytest.approx(0.2135518, abs=1e-7)
    assert tilted_variance(GAUSSIAN, 0.3) == pytest.approx(math.expm1(0.09), rel=1e-14)
    assert tilted_variance(UNIFORM, 1e-3) == pytest.approx(1e-6, rel=1e-3)


# ==================== 초기 모멘트 ====================

def test_initial_moment_second_is_variance():
    assert initial_moment(GAUSSIAN, 0.2, 2) == tilted_variance(GAUSSIAN, 0.2)
    with pytest.raises(DomainError):
        initial_moment(GAUSSIAN, 0.2, 1)


def test_initial_moments_gaussian_closed_form():
    """가우시안: E[(W-1)^3] = e^{3β²} - 3e^{β²} + 2"""
    beta = 0.25
    expected = math.exp(3 * beta ** 2) - 3 * math.exp(beta ** 2) + 2
    moments = initial_moments(GAUSSIAN, beta, 4)
    assert moments[3] == pytest.approx(expected, rel=1e-12)
    assert moments[4] > 0


def test_exact_support_normalized():
    support = exact_support(RADEMACHER, 0.4)
    assert sum(p for p, _ in support) == 1
    assert sum(p * w for p, w in support) == Fraction(1)


@pytest.mark.parametrize("text", ["rademacher", "bernoulli:0.3"])
def test_exact_moments_agree_with_mpmath(text):
    model = DisorderModel.parse(text)
    exact = exact_initial_moments(model, 0.4, 5)
    approximate = initial_moments(model, 0.4, 5)
    assert exact.exact
    for m in range(2, 6):
        assert float(exact[m]) == pytest.approx(approximate[m], rel=1e-12, abs=1e-15)


def test_exact_support_needs_discrete_law():
    with pytest.raises(DomainError):
        exact_support(GAUSSIAN, 0.1)


# ==================== β 스케줄 ====================

def test_literal_schedule_example():
    """b=2, n=100, 가우시안, r=0: κ/10 + κ log 100/1000"""
    schedule = BetaSchedule.for_model(2, GAUSSIAN, 0.0, form=LITERAL)
    assert beta_schedule(schedule, 100) == pytest.approx(0.14793405, abs=1e-8)


def test_schedule_rejects_bad_inputs():
    schedule = BetaSchedule.for_model(2, GAUSSIAN)
    with pytest.raises(DomainError):
        beta_schedule(schedule, 1)
    with pytest.raises(DomainError):
        BetaSchedule(b=2, form="other")
    with pytest.raises(DomainError):
        beta_schedule(BetaSchedule(b=2, r=-1e9), 16)


def test_skew_shifts_schedule_at_order_one_over_n():
    """τ 항: β(τ) - β(0) = -τκ²/(2n)"""
    n = 10_000
    base = beta_schedule(BetaSchedule.for_model(2, GAUSSIAN, form=LITERAL, force_tau=0.0), n)
    skewed = beta_schedule(BetaSchedule.for_model(2, GAUSSIAN, form=LITERAL, force_tau=1.5), n)
    assert (base - skewed) * n == pytest.approx(1.5, rel=1e-12)


@pytest.mark.parametrize("text", ["gaussian", "rademacher", "uniform"])
def test_calibrated_schedule_matches_variance_form(text):
    """calibrated: n²(V_β - κ²(1/n + η log n/n² + r/n²)) → 0 (대칭 분포는 O(log²n/n))"""
    model = DisorderModel.parse(text)
    schedule = BetaSchedule.for_model(2, model, r=1.5, form=CALIBRATED)
    residuals = [abs(v_form_check(model, schedule, 2 ** k).residual_n2) for k in (10, 13, 16)]
    assert residuals[-1] < residuals[0]
    assert residuals[-1] < 0.1


def test_literal_schedule_residual_grows_with_log_n():
    schedule = BetaSchedule.for_model(2, GAUSSIAN, form=LITERAL)
    residuals = [v_form_check(GAUSSIAN, schedule, 2 ** k).residual_n2 for k in (10, 13, 16)]
    assert residuals[0] < residuals[1] < residuals[2]
    assert residuals[0] > 1.0


def test_calibrated_schedule_skewed_law_residual_decays():
    """skew 가 있으면 잔차는 O(log n/√n) 로 줄어든다"""
    model = DisorderModel.parse("bernoulli:0.2")
    schedule = BetaSchedule.for_model(2, model, r=1.5)
    residuals = [abs(v_form_check(model, schedule, 2 ** k).residual_n2) for k in (10, 13, 16)]
    assert residuals[0] > residuals[1] > residuals[2]
