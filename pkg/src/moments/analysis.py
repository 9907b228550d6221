"""
DPM (Diamond Polymer Moments) - Moment Asymptotics
가우시안 상수, |r| → ∞ 점근 스캔, 궤적 모멘트 비율, 임계 이분법 스캔
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from src.core.exceptions import DomainError
from src.core.models import BranchingParams, DEFAULT_POLICY, PrecisionPolicy
from src.disorder.laws import DisorderModel, initial_moments
from src.disorder.scaling import CALIBRATED, BetaSchedule, beta_schedule
from src.moments.engine import limit_moments_batch, limit_moments_profile, moment_trajectory
from src.numerics.variance_map import critical_constants, m_map_array

PROFILE = "profile"
LADDER = "ladder"

BOUNDED_SLACK = 1.10     # 증분 비증가 허용 배수
BOUNDED_SPREAD = 0.05    # 상대 폭 허용치

DIVERGING = "diverging"
VANISHING = "vanishing"
MARGINAL = "marginal"
DIVERGE_LEVEL = 1e3
VANISH_LEVEL = 1e-2


def gaussian_constant(b: int, m: int) -> float:
    """κ_b^m · m! / (2^{m/2} (m/2)!)"""
    if m < 2 or m % 2:
        raise DomainError(f"gaussian_constant needs even m >= 2, got {m}", value=m)
    kappa_sq = critical_constants(BranchingParams(b)).kappa_sq
    half = m // 2
    return float(kappa_sq ** half * math.factorial(m) / (2 ** half * math.factorial(half)))


def is_bounded(sequence: Sequence[float]) -> bool:
    """증분 절댓값이 (10% 여유로) 비증가하거나 상대 폭이 5% 이내"""
    values = [float(v) for v in sequence]
    if len(values) < 2 or not all(math.isfinite(v) for v in values):
        return len(values) < 2
    scale = max(abs(v) for v in values)
    if scale == 0 or (max(values) - min(values)) <= BOUNDED_SPREAD * scale:
        return True
    increments = [abs(c - a) for a, c in zip(values, values[1:])]
    return all(later <= BOUNDED_SLACK * earlier for earlier, later in zip(increments, increments[1:]))


# ==================== 점근 스캔 ====================

@dataclass
class AsymptoticsReport:
    """|r|^{⌈m/2⌉} R^(m)(r) 수열과 판정"""
    b: int
    m_max: int
    route: str
    r_values: List[float]
    scaled: Dict[int, List[float]] = field(default_factory=dict)
    gaussian_ratio: Dict[int, float] = field(default_factory=dict)   # 짝수 m, 가장 왼쪽 r
    bounded: Dict[int, bool] = field(default_factory=dict)
    variance_remainder: List[float] = field(default_factory=list)    # |r|³/log²|r| · 잔차

    def to_dict(self) -> dict:
        return {
            "b": self.b, "m_max": self.m_max, "route": self.route, "r_values": list(self.r_values),
            "scaled": {str(m): v for m, v in self.scaled.items()},
            "gaussian_ratio": {str(m): v for m, v in self.gaussian_ratio.items()},
            "bounded": {str(m): v for m, v in self.bounded.items()},
            "variance_remainder": list(self.variance_remainder),
        }


def asymptotics_scan(b: int, m_max: int, r_ladder: Sequence[float], route: str = PROFILE,
                     model: Optional[DisorderModel] = None,
                     policy: PrecisionPolicy = DEFAULT_POLICY) -> AsymptoticsReport:
    """
    짝수 m: |r|^{m/2} R^(m)(r) → gaussian_constant(b, m)
    홀수 m: |r|^{(m+1)/2} R^(m)(r) 유계
    """
    params = BranchingParams(b)
    params.require_critical("asymptotics_scan")
    if route not in (PROFILE, LADDER):
        raise DomainError(f"unknown asymptotics route '{route}'", value=route)
    r_values = sorted((float(r) for r in r_ladder), reverse=True)
    if any(r > -5 for r in r_values):
        raise DomainError("asymptotics_scan needs r <= -5", value=max(r_values))

    if route == PROFILE:
        rows = [limit_moments_profile(b, m_max, r, policy) for r in r_values]
    else:
        rows = limit_moments_batch(b, m_max, model or DisorderModel.parse("gaussian"), r_values, policy)

    constants = critical_constants(params)
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    report = AsymptoticsReport(b=b, m_max=m_max, route=route, r_values=r_values)
    for m in range(2, m_max + 1):
        power = (m + 1) // 2
        report.scaled[m] = [abs(r) ** power * row[m] for r, row in zip(r_values, rows)]
        report.bounded[m] = is_bounded(report.scaled[m])
        if m % 2 == 0:
            report.gaussian_ratio[m] = report.scaled[m][-1] / gaussian_constant(b, m)

    for r, row in zip(r_values, rows):
        leading = -kappa_sq / r + kappa_sq * eta * math.log(-r) / r ** 2
        report.variance_remainder.append(abs(row[2] - leading) * abs(r) ** 3 / math.log(-r) ** 2)

    logger.info(f"asymptotics_scan b={b} route={route}: gaussian ratios "
                f"{ {m: round(v, 6) for m, v in report.gaussian_ratio.items()} }")
    return report


# ==================== 궤적 비율 ====================

def moment_bound_ratio(b: int, m: int, model: DisorderModel, r: float, n: int,
                       policy: PrecisionPolicy = DEFAULT_POLICY, form: str = CALIBRATED) -> float:
    """max_{1≤k≤n} |ρ_k^(m)| / (ρ_k^(2))^{m/2}, β = β_{n,r}"""
    BranchingParams(b).require_critical("moment_bound_ratio")
    if m == 2:
        return 1.0
    beta = beta_schedule(BetaSchedule.for_model(b, model, r, form=form), n, model)
    init = initial_moments(model, beta, m, policy)
    ratio = 0.0
    for vector in moment_trajectory(b, m, init, n):
        if vector[0] > 0:
            ratio = max(ratio, abs(vector[m - 2]) / vector[0] ** (m / 2))
    logger.debug(f"moment_bound_ratio b={b} m={m} r={r} n={n}: {ratio:.6g}")
    return ratio


# ==================== 이분법 ====================

@dataclass
class DichotomyReport:
    """t 별 ladder 분류 (마지막 n 이 판정)"""
    b: int
    t_values: List[float]
    n_ladder: List[int]
    classes: Dict[float, List[str]] = field(default_factory=dict)
    finals: Dict[float, List[float]] = field(default_factory=dict)

    def verdict(self, t: float) -> str:
        return self.classes[float(t)][-1]

    def to_dict(self) -> dict:
        return {
            "b": self.b, "t_values": list(self.t_values), "n_ladder": list(self.n_ladder),
            "classes": {repr(t): v for t, v in self.classes.items()},
            "finals": {repr(t): v for t, v in self.finals.items()},
        }


def _classify(final: float) -> str:
    if not math.isfinite(final) or final > DIVERGE_LEVEL:
        return DIVERGING
    if final < VANISH_LEVEL:
        return VANISHING
    return MARGINAL


def dichotomy_scan(b: int, t_values: Sequence[float], n_ladder: Sequence[int]) -> DichotomyReport:
    """M_b^n(t²/n) 를 모든 t 에 대해 함께 반복해 분류"""
    BranchingParams(b).require_critical("dichotomy_scan")
    t_array = np.array([float(t) for t in t_values])
    report = DichotomyReport(b=b, t_values=list(t_array), n_ladder=sorted(int(n) for n in n_ladder))
    for t in t_array:
        report.classes[float(t)] = []
        report.finals[float(t)] = []

    for n in report.n_ladder:
        x = t_array ** 2 / n
        for _ in range(n):
            x = m_map_array(b, x)
            x[x > DIVERGE_LEVEL] = np.inf
        for t, final in zip(t_array, x):
            report.classes[float(t)].append(_classify(float(final)))
            report.finals[float(t)].append(float(final))
        logger.debug(f"dichotomy b={b} n={n}: {[report.classes[float(t)][-1] for t in t_array]}")
    return report
