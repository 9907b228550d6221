"""
DPM (Diamond Polymer Moments) - Critical Temperature Schedule
임계 역온도 스케줄 β_{n,r} 과 초기 분산 점근 검사
"""

import math
from dataclasses import dataclass
from typing import Optional

from loguru import logger

from src.core.exceptions import DomainError
from src.core.models import BranchingParams
from src.disorder.laws import DisorderModel, kurtosis_excess, skew, tilted_variance
from src.numerics.variance_map import critical_constants

CALIBRATED = "calibrated"
LITERAL = "literal"


@dataclass(frozen=True)
class BetaSchedule:
    """
    β_{n,r} 스케줄

    literal:    κ/√n - τκ²/(2n) + κη log n/n^{3/2} + κr/n^{3/2}
    calibrated: κ/√n - τκ²/(2n) + (κ/2)(η log n + r + c)/n^{3/2},
                c = κ²(5τ²/4 - 1/2 - 7κ₄/12)
    calibrated 형태에서 V_β = κ²(1/n + η log n/n² + r/n²) + o(1/n²)
    """
    b: int
    tau: float = 0.0
    r: float = 0.0
    kurtosis: float = 0.0          # κ₄ (calibrated 상수항에만 사용)
    form: str = CALIBRATED

    def __post_init__(self):
        if self.form not in (CALIBRATED, LITERAL):
            raise DomainError(f"unknown schedule form '{self.form}'", value=self.form)
        BranchingParams(self.b)

    @classmethod
    def for_model(cls, b: int, model: DisorderModel, r: float = 0.0,
                  form: str = CALIBRATED, force_tau: Optional[float] = None) -> "BetaSchedule":
        """분포에 맞춘 스케줄 (force_tau 로 τ 강제 가능)"""
        tau = skew(model) if force_tau is None else float(force_tau)
        return cls(b=b, tau=tau, r=float(r), kurtosis=kurtosis_excess(model), form=form)

    @property
    def law_constant(self) -> float:
        kappa_sq = float(critical_constants(BranchingParams(self.b)).kappa_sq)
        return kappa_sq * (1.25 * self.tau ** 2 - 0.5 - 7.0 * self.kurtosis / 12.0)


def beta_schedule(schedule: BetaSchedule, n: int, model: Optional[DisorderModel] = None) -> float:
    """
    β_{n,r} 평가 (o(n^{-3/2}) 항은 0)

    Raises:
        DomainError: n < 2, β <= 0, 또는 β > β_max/2
    """
    if n < 2:
        raise DomainError(f"beta_schedule needs n >= 2, got {n}", value=n)
    constants = critical_constants(BranchingParams(schedule.b))
    kappa, eta = constants.kappa, constants.eta
    kappa_sq = float(constants.kappa_sq)
    log_n = math.log(n)

    beta = kappa / math.sqrt(n) - schedule.tau * kappa_sq / (2.0 * n)
    if schedule.form == LITERAL:
        beta += kappa * eta * log_n / n ** 1.5 + kappa * schedule.r / n ** 1.5
    else:
        beta += 0.5 * kappa * (eta * log_n + schedule.r + schedule.law_constant) / n ** 1.5

    if not beta > 0:
        raise DomainError(f"beta_schedule gives beta={beta:.6g} <= 0 at n={n}, r={schedule.r}", value=beta)
    if model is not None and beta > model.beta_max / 2:
        raise DomainError(f"beta={beta:.6g} exceeds beta_max/2 for {model.label}", value=beta)
    return beta


@dataclass
class VFormDiagnostic:
    """초기 분산 점근 잔차"""
    n: int
    beta: float
    variance: float
    target: float
    residual_n2: float       # n²(V_β - target)
    residual_n15: float      # n^{3/2}(V_β - target)

    def to_dict(self) -> dict:
        return {"n": self.n, "beta": self.beta, "variance": self.variance, "target": self.target,
                "residual_n2": self.residual_n2, "residual_n15": self.residual_n15}


def v_form_check(model: DisorderModel, schedule: BetaSchedule, n: int) -> VFormDiagnostic:
    """n²·(V_β - κ²(1/n + η log n/n² + r/n²)) 계산"""
    beta = beta_schedule(schedule, n, model)
    variance = tilted_variance(model, beta)
    constants = critical_constants(BranchingParams(schedule.b))
    kappa_sq, eta = float(constants.kappa_sq), constants.eta
    target = kappa_sq * (1.0 / n + eta * math.log(n) / n ** 2 + schedule.r / n ** 2)
    difference = variance - target
    diagnostic = VFormDiagnostic(n=n, beta=beta, variance=variance, target=target,
                                 residual_n2=difference * n ** 2, residual_n15=difference * n ** 1.5)
    logger.debug(f"v_form_check {model.label} form={schedule.form} n={n}: "
                 f"n^2 residual={diagnostic.residual_n2:.6g}")
    return diagnostic
