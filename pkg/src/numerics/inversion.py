"""
DPM (Diamond Polymer Moments) - G_b and its Inverse
G_b(x) = κ²/x + η log(κ²/x) - F_b(x), R_b(r) = G_b^{-1}(-r)
"""

import math
import threading
from typing import Dict, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from src.core.exceptions import DomainError, NotConvergedError
from src.core.models import BranchingParams, DEFAULT_POLICY, PrecisionPolicy
from src.numerics.series import f_series_array
from src.numerics.variance_map import critical_constants

ArrayLike = Union[float, np.ndarray]

MAX_ROOT_ITERATIONS = 200


def _g_array(params: BranchingParams, x: np.ndarray, policy: PrecisionPolicy) -> np.ndarray:
    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    return kappa_sq / x + eta * np.log(kappa_sq / x) - f_series_array(params, x, policy)


# ==================== δ_b (단조 구간) ====================

_delta_cache: Dict[Tuple[int, float, float], Tuple[float, float]] = {}
_delta_lock = threading.Lock()


def delta_threshold(params: BranchingParams,
                    policy: PrecisionPolicy = DEFAULT_POLICY) -> Tuple[float, float]:
    """
    격자 스캔으로 G_b 가 순감소하는 최대 격자점 δ_b 탐색 (1회 계산 후 캐시)

    Returns:
        (δ_b, G_b(δ_b))
    """
    params.require_critical("delta_threshold")
    key = (params.b, policy.delta_grid_step, policy.series_tail_tol)
    cached = _delta_cache.get(key)
    if cached is not None:
        return cached

    with _delta_lock:
        cached = _delta_cache.get(key)
        if cached is not None:
            return cached

        kappa_sq = float(critical_constants(params).kappa_sq)
        count = int(math.floor(kappa_sq / policy.delta_grid_step + 1e-9))
        grid = policy.delta_grid_step * np.arange(1, count + 1)
        values = _g_array(params, grid, policy)

        decreasing = np.diff(values) < 0
        broken = np.flatnonzero(~decreasing)
        last = int(broken[0]) if broken.size else count - 1
        result = (float(grid[last]), float(values[last]))
        _delta_cache[key] = result
        logger.info(f"delta_b scan (b={params.b}): delta={result[0]:.4g}, G(delta)={result[1]:.10g}")
        return result


# ==================== G_b ====================

def g_func(params: BranchingParams, x: ArrayLike,
           policy: PrecisionPolicy = DEFAULT_POLICY) -> ArrayLike:
    """G_b(x), x ∈ (0, δ_b]"""
    params.require_critical("g_func")
    delta, _ = delta_threshold(params, policy)
    values = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(values <= 0) or np.any(values > delta * (1 + 1e-12)):
        raise DomainError(f"g_func: x must lie in (0, {delta}]", value=x)
    result = _g_array(params, values, policy)
    return float(result[0]) if np.ndim(x) == 0 else result


def g_inverse_asymptote(params: BranchingParams, y: float) -> float:
    """κ²/y + κ²η log y / y² (y > 1)"""
    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    return kappa_sq / y + kappa_sq * eta * math.log(y) / (y * y)


def g_inverse(params: BranchingParams, y: float,
              policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """
    G_b(x) = y 를 (0, δ_b] 에서 브래킷 근찾기 (점근식으로 시작점 설정)

    Raises:
        DomainError: y < G_b(δ_b)
        NotConvergedError: 반복 한도 초과
    """
    params.require_critical("g_inverse")
    y = float(y)
    delta, g_delta = delta_threshold(params, policy)
    if not math.isfinite(y) or y < g_delta:
        raise DomainError(f"g_inverse: y must be >= G_b(delta_b) = {g_delta:.10g}, got {y}", value=y)
    if y == g_delta:
        return delta

    def objective(x: float) -> float:
        return float(_g_array(params, np.array([x]), policy)[0]) - y

    kappa_sq = float(critical_constants(params).kappa_sq)
    seed = g_inverse_asymptote(params, y) if y > math.e else kappa_sq / max(y, 1.0)
    seed = min(max(seed, 1e-300), delta)

    lower, upper = seed * 0.5, min(delta, seed * 2.0)
    while objective(lower) < 0:
        lower *= 0.5
        if lower < 1e-300:
            raise NotConvergedError(f"g_inverse: no lower bracket for y={y}", n=0)
    if objective(upper) > 0:
        upper = delta

    root, info = brentq(objective, lower, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=MAX_ROOT_ITERATIONS, full_output=True, disp=False)
    if not info.converged:
        raise NotConvergedError(f"g_inverse(y={y}) root-find did not converge: {info.flag}",
                                n=info.iterations)
    logger.debug(f"g_inverse(b={params.b}, y={y:.6g}) = {root:.15g} after {info.iterations} iterations")
    return float(root)
