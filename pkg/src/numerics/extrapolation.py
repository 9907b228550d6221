"""
DPM (Diamond Polymer Moments) - Ladder Extrapolation
n = 2^k 래더 값의 n → ∞ 외삽
"""

import math
from typing import Sequence, Tuple

import numpy as np

# 오차 모형: (A log²n + B log n + C)/n
_BASIS = (
    lambda n: np.ones_like(n),
    lambda n: np.log(n) ** 2 / n,
    lambda n: np.log(n) / n,
    lambda n: 1.0 / n,
)

MAX_POINTS = len(_BASIS)


def _fit(ns: np.ndarray, values: np.ndarray) -> float:
    columns = [f(ns) for f in _BASIS[:len(ns)]]
    design = np.column_stack(columns)
    scale = np.abs(design).max(axis=0)
    coefficients, *_ = np.linalg.lstsq(design / scale, values, rcond=None)
    return float(coefficients[0] / scale[0])


def extrapolate(ns: Sequence[int], values: Sequence[float],
                max_points: int = MAX_POINTS) -> Tuple[float, float]:
    """
    마지막 최대 max_points 개 래더 점으로 극한 추정

    Returns:
        (추정값, 잔차) - 잔차는 한 칸 앞 창과의 차이
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    count = len(ns)
    if count == 0:
        return math.nan, math.inf
    if count == 1:
        return float(values[0]), math.inf

    width = min(max_points, count)
    estimate = _fit(ns[-width:], values[-width:])

    if count > width:
        previous = _fit(ns[-width - 1:-1], values[-width - 1:-1])
    else:
        previous = _fit(ns[-(width - 1):], values[-(width - 1):]) if width > 2 else float(values[-1])
    return estimate, abs(estimate - previous)
