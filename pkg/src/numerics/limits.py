"""
DPM (Diamond Polymer Moments) - Variance Limit R_b(r)
래더 반복 + 외삽으로 R_b(r) = lim M_b^n(X^{(n,r)}) 계산
"""

import math
import threading
from typing import Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from src.core.exceptions import IterationOverflow, NotConvergedError
from src.core.models import BranchingParams, DEFAULT_POLICY, LadderEstimate, PrecisionPolicy
from src.numerics.extrapolation import extrapolate
from src.numerics.series import d_product
from src.numerics.variance_map import critical_constants


def initial_variance(params: BranchingParams, n: int, r) -> np.ndarray:
    """X^{(n,r)} = κ²(1/n + η log n/n² + r/n²)"""
    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    r = np.asarray(r, dtype=float)
    return kappa_sq * (1.0 / n + eta * math.log(n) / n ** 2 + r / n ** 2)


def ladder_start_exponent(r: float, policy: PrecisionPolicy) -> int:
    """n > 4|r| 를 만족하는 최소 래더 지수"""
    k = policy.ladder_min_exponent
    while 2 ** k <= 4 * abs(r) and k < policy.ladder_max_exponent:
        k += 1
    return k


def _iterate_batch(b: int, x: np.ndarray, n: int) -> np.ndarray:
    """M_b 를 n 회 적용 (배열, overflow 는 inf)"""
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            x = np.expm1(b * np.log1p(x)) / b
    return x


# ==================== 캐시 ====================

_memo: Dict[Tuple, LadderEstimate] = {}
_memo_lock = threading.Lock()


def _memo_key(params: BranchingParams, r: float, policy: PrecisionPolicy) -> Tuple:
    return (params.b, float(r), policy.ladder_min_exponent, policy.ladder_max_exponent,
            policy.cross_tol, policy.tol_rel)


def clear_cache() -> None:
    with _memo_lock:
        _memo.clear()


# ==================== R_b(r) ====================

def r_limit_batch(params: BranchingParams, r_values: Sequence[float],
                  policy: PrecisionPolicy = DEFAULT_POLICY) -> List[LadderEstimate]:
    """
    여러 r 에 대한 래더 계산 (래더 단계마다 배열로 한 번에 반복)

    overflow 된 r 은 value=inf, 수렴 실패는 residual 로 판단 (호출자 책임)
    """
    params.require_critical("r_limit")
    r_values = [float(r) for r in r_values]
    with _memo_lock:
        missing = [r for r in dict.fromkeys(r_values) if _memo_key(params, r, policy) not in _memo]

    if missing:
        r_array = np.array(missing)
        starts = np.array([ladder_start_exponent(r, policy) for r in missing])
        exponents = list(range(int(starts.min()), policy.ladder_max_exponent + 1))
        raw = np.full((len(exponents), len(missing)), np.nan)

        for i, k in enumerate(exponents):
            n = 2 ** k
            active = starts <= k
            x0 = np.where(active, initial_variance(params, n, r_array), 0.0)
            active &= x0 > 0
            raw[i] = np.where(active, _iterate_batch(params.b, np.where(active, x0, 0.0), n), np.nan)
            logger.debug(f"r_limit ladder b={params.b} n=2^{k}: {int(active.sum())} active")

        with _memo_lock:
            for j, r in enumerate(missing):
                column = raw[:, j]
                used = ~np.isnan(column)
                ns = [2 ** k for k, ok in zip(exponents, used) if ok]
                values = column[used]
                if values.size and math.isinf(values[-1]):
                    _memo[_memo_key(params, r, policy)] = LadderEstimate(
                        value=math.inf, residual=math.inf, converged_n=ns[-1], ladder=ns,
                        raw=list(values))
                    continue
                finite = np.isfinite(values)
                value, residual = extrapolate(np.array(ns)[finite], values[finite])
                _memo[_memo_key(params, r, policy)] = LadderEstimate(
                    value=value, residual=residual, converged_n=ns[-1] if ns else 0,
                    ladder=ns, raw=[float(v) for v in values])

    with _memo_lock:
        return [_memo[_memo_key(params, r, policy)] for r in r_values]


def check_estimate(estimate: LadderEstimate, label: str, policy: PrecisionPolicy) -> LadderEstimate:
    """overflow / 수렴 실패 판정"""
    if math.isinf(estimate.value):
        raise IterationOverflow(f"{label}: iterate overflowed at n={estimate.converged_n}",
                                steps_completed=estimate.converged_n)
    scale = max(1.0, abs(estimate.value))
    if not estimate.residual <= policy.cross_tol * scale:
        raise NotConvergedError(f"{label}: extrapolation residual {estimate.residual:.3e} too large",
                                achieved=estimate.residual, n=estimate.converged_n)
    if estimate.residual > policy.tol_rel * scale:
        logger.warning(f"{label}: residual {estimate.residual:.3e} above tol_rel")
    return estimate


def r_limit(params: BranchingParams, r: float,
            policy: PrecisionPolicy = DEFAULT_POLICY) -> LadderEstimate:
    """
    R_b(r): n = 2^k 래더마다 X^{(n,r)} 에 M_b 를 n 회 적용 후 외삽

    Raises:
        NotConvergedError, IterationOverflow
    """
    estimate = r_limit_batch(params, [r], policy)[0]
    return check_estimate(estimate, f"r_limit(b={params.b}, r={r})", policy)


def r_limit_derivative(params: BranchingParams, r: float,
                       policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """
    R_b'(r) = lim (κ²/n²) Π_{k<=n} (1 + R_b(r-k))^{b-1}

    R_b(r-k) = M_b^{-k}(R_b(r)) 이므로 곱은 κ²·D_b(R_b(r)) 와 같다.
    """
    value = r_limit(params, r, policy).value
    kappa_sq = float(critical_constants(params).kappa_sq)
    product = d_product(params, value, policy)
    return kappa_sq * product.value
