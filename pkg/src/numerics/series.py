"""
DPM (Diamond Polymer Moments) - Inverse-Orbit Series
역궤도 M_b^{-k}(x) 위의 급수와 곱: S_b, D_b, F_b
"""

import math
from typing import Union

import numpy as np
from loguru import logger

from src.core.exceptions import DomainError, NotConvergedError
from src.core.models import (
    BranchingParams, DEFAULT_POLICY, LadderEstimate, PrecisionPolicy, SeriesResult,
)
from src.numerics.auxiliary import h_hat_array, taylor_data
from src.numerics.variance_map import critical_constants, m_inverse, m_inverse_array

ArrayLike = Union[float, np.ndarray]

_CHECK_EVERY = 64  # 꼬리 판정 주기


def _tail_sum_squares(kappa_sq: float, eta: float, s):
    """Σ_{j>=1} (κ²/s_j)² 의 점근 꼬리"""
    kappa4 = kappa_sq * kappa_sq
    return kappa4 / (s + 0.5) + eta * kappa4 / (2.0 * s * s)


# ==================== S_b ====================

def s_series(params: BranchingParams, x: float,
             policy: PrecisionPolicy = DEFAULT_POLICY) -> SeriesResult:
    """
    S_b(x) = Σ_{k>=0} (M_b^{-k}(x))²

    반복점이 1/k 영역에 들어오면 꼬리를 해석적으로 닫는다.
    """
    params.require_critical("s_series")
    x = float(x)
    if not x >= 0:
        raise DomainError(f"s_series: x must be >= 0, got {x}", value=x)
    if x == 0:
        return SeriesResult(value=0.0, terms=1, tail=0.0, achieved=0.0)

    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    bound_constant = kappa_sq * kappa_sq * (1.0 + eta) ** 2

    z, total, terms = x, x * x, 1
    limit = 2 ** policy.ladder_max_exponent
    while True:
        z = m_inverse(params, z)
        increment = z * z
        total += increment
        terms += 1
        s = kappa_sq / z
        achieved = bound_constant / s ** 3
        if increment < policy.series_tail_tol or (terms >= policy.series_min_terms
                                                   and achieved < policy.series_tail_tol):
            break
        if terms > limit:
            raise NotConvergedError("s_series tail tolerance not reached", achieved=achieved, n=terms)

    tail = _tail_sum_squares(kappa_sq, eta, s)
    logger.debug(f"s_series(b={params.b}, x={x:.6g}): {terms} terms, tail={tail:.3e}")
    return SeriesResult(value=total + tail, terms=terms, tail=tail, achieved=achieved)


# ==================== D_b ====================

def d_product_partial(params: BranchingParams, x: float, n: int) -> float:
    """(1/n²) Π_{k=1}^n (1 + M_b^{-k}(x))^{b-1}"""
    params.require_critical("d_product_partial")
    if n < 1:
        raise DomainError(f"d_product_partial: n must be >= 1, got {n}", value=n)
    z, log_sum = float(x), 0.0
    for _ in range(n):
        z = m_inverse(params, z)
        log_sum += (params.b - 1) * math.log1p(z)
    return math.exp(log_sum - 2.0 * math.log(n))


def d_product(params: BranchingParams, x: float,
              policy: PrecisionPolicy = DEFAULT_POLICY) -> LadderEstimate:
    """
    D_b(x) = lim (1/n²) Π_{k<=n} (1 + M_b^{-k}(x))^{b-1}

    n = 2^k 마다 꼬리를 닫은 추정을 만들고 연속 추정의 상대차가 tol_rel 미만이면 종료
    """
    params.require_critical("d_product")
    x = float(x)
    if not x >= 0:
        raise DomainError(f"d_product: x must be >= 0, got {x}", value=x)
    if x == 0:
        return LadderEstimate(value=0.0, residual=0.0, converged_n=0)

    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    b = params.b

    z, log_sum, done = x, 0.0, 0
    previous, residual = None, math.inf
    ladder, raw = [], []
    for k in range(policy.ladder_min_exponent, policy.ladder_max_exponent + 1):
        n = 2 ** k
        for _ in range(n - done):
            z = m_inverse(params, z)
            log_sum += (b - 1) * math.log1p(z)
        done = n
        shifted = kappa_sq / z + 0.5
        estimate = math.exp(log_sum - 2.0 * math.log(shifted) + (2.0 * eta - kappa_sq) / shifted)
        ladder.append(n)
        raw.append(estimate)
        if previous is not None:
            residual = abs(estimate - previous) / estimate
            if residual < policy.tol_rel:
                return LadderEstimate(value=estimate, residual=residual, converged_n=n,
                                      ladder=ladder, raw=raw)
        previous = estimate

    raise NotConvergedError(f"d_product(b={b}, x={x}) ladder exhausted",
                            achieved=residual, n=ladder[-1])


# ==================== F_b ====================

def f_series_array(params: BranchingParams, x: np.ndarray,
                   policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    """
    F_b(x) = Σ_{ℓ>=1} ĥ_b(M^{-ℓ}x)(M^{-ℓ}x)² 의 벡터 평가

    꼬리: κ⁴ĥ(0)/(s+½) + (κ⁶ĥ'(0) + ηκ⁴ĥ(0))/(2s²), s = κ²/x_L
    """
    params.require_critical("f_series")
    x = np.asarray(x, dtype=float)
    data = taylor_data(params)
    kappa_sq, eta = float(data.kappa_sq), float(data.eta)
    kappa4 = kappa_sq * kappa_sq
    if np.any(x <= 0) or np.any(x > kappa_sq * (1 + 1e-12)):
        raise DomainError(f"f_series: x must lie in (0, {kappa_sq}]", value=x)

    h0, h1 = data.h_hat0, data.h_hat1
    h2 = float(data.h_hat_series[2])
    bound_constant = kappa4 * (abs(h0) * (1 + eta) ** 2 + abs(h1) * kappa_sq + abs(h2) * kappa4)

    b = params.b
    z = x.copy()
    total = np.zeros_like(z)
    limit = 2 ** policy.ladder_max_exponent
    terms = 0
    while True:
        z = m_inverse_array(b, z)
        total += h_hat_array(params, z, policy) * z * z
        terms += 1
        if terms % _CHECK_EVERY == 0 or terms == policy.series_min_terms:
            s_min = kappa_sq / float(z.max())
            achieved = bound_constant / s_min ** 3
            if terms >= policy.series_min_terms and achieved < policy.series_tail_tol:
                break
            if terms >= limit:
                raise NotConvergedError("f_series tail tolerance not reached", achieved=achieved, n=terms)

    s = kappa_sq / z
    tail = kappa4 * h0 / (s + 0.5) + (kappa4 * kappa_sq * h1 + eta * kappa4 * h0) / (2.0 * s * s)
    return total + tail


def f_series(params: BranchingParams, x: ArrayLike,
             policy: PrecisionPolicy = DEFAULT_POLICY) -> ArrayLike:
    """F_b(x), x ∈ (0, κ_b²]"""
    values = f_series_array(params, np.atleast_1d(np.asarray(x, dtype=float)), policy)
    if np.ndim(x) == 0:
        return float(values[0])
    return values
