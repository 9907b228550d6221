"""
DPM (Diamond Polymer Moments) - Disorder Laws
결합 무질서 분포: 로그 적률생성함수, skew, 정확한 지지집합
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath
import numpy as np

from src.core.exceptions import ConfigurationError, DomainError
from src.core.models import DEFAULT_POLICY, MomentVector, PrecisionPolicy

BETA_MAX = 20.0            # 모든 분포 공통 상한 (exp overflow 방지)
_UNIFORM_SERIES_CUTOFF = 1e-3
_SQRT3 = math.sqrt(3.0)


class DisorderKind(Enum):
    """무질서 분포 종류"""
    STANDARD_GAUSSIAN = "standard_gaussian"
    RADEMACHER = "rademacher"
    STANDARDIZED_BERNOULLI = "standardized_bernoulli"
    STANDARDIZED_UNIFORM = "standardized_uniform"


_ALIASES = {
    "gaussian": DisorderKind.STANDARD_GAUSSIAN,
    "normal": DisorderKind.STANDARD_GAUSSIAN,
    "standard_gaussian": DisorderKind.STANDARD_GAUSSIAN,
    "rademacher": DisorderKind.RADEMACHER,
    "bernoulli": DisorderKind.STANDARDIZED_BERNOULLI,
    "standardized_bernoulli": DisorderKind.STANDARDIZED_BERNOULLI,
    "uniform": DisorderKind.STANDARDIZED_UNIFORM,
    "standardized_uniform": DisorderKind.STANDARDIZED_UNIFORM,
}


@dataclass(frozen=True)
class DisorderModel:
    """
    평균 0, 분산 1 로 표준화된 결합 무질서 분포

    Bernoulli 는 (X - p)/sqrt(p(1-p)), X ~ Bernoulli(p)
    """
    kind: DisorderKind
    p: Optional[float] = None     # standardized_bernoulli 전용

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", DisorderKind(self.kind))
        if self.kind == DisorderKind.STANDARDIZED_BERNOULLI:
            if self.p is None or not 0 < float(self.p) < 1:
                raise DomainError(f"standardized_bernoulli needs p in (0, 1), got {self.p}", value=self.p)
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise DomainError(f"{self.kind.value} takes no parameter p")

    @classmethod
    def parse(cls, text: str) -> "DisorderModel":
        """'gaussian', 'rademacher', 'bernoulli:0.2', 'uniform' 형식"""
        name, _, argument = str(text).strip().lower().partition(":")
        kind = _ALIASES.get(name)
        if kind is None:
            raise ConfigurationError(f"unknown disorder model '{text}'", key="model")
        if kind == DisorderKind.STANDARDIZED_BERNOULLI:
            try:
                return cls(kind, p=float(argument) if argument else 0.5)
            except ValueError:
                raise ConfigurationError(f"bad bernoulli parameter in '{text}'", key="model")
        if argument:
            raise ConfigurationError(f"model '{name}' takes no parameter", key="model")
        return cls(kind)

    @property
    def label(self) -> str:
        if self.kind == DisorderKind.STANDARDIZED_BERNOULLI:
            return f"{self.kind.value}({self.p:g})"
        return self.kind.value

    @property
    def beta_max(self) -> float:
        return BETA_MAX

    @property
    def is_discrete(self) -> bool:
        return self.kind in (DisorderKind.RADEMACHER, DisorderKind.STANDARDIZED_BERNOULLI)

    # ---------- Bernoulli 보조 ----------

    @property
    def _sigma(self) -> float:
        return math.sqrt(self.p * (1.0 - self.p))

    def support_values(self) -> List[Tuple[Fraction, float]]:
        """이산 분포의 (확률, ω) 목록"""
        if self.kind == DisorderKind.RADEMACHER:
            return [(Fraction(1, 2), 1.0), (Fraction(1, 2), -1.0)]
        if self.kind == DisorderKind.STANDARDIZED_BERNOULLI:
            p = Fraction(str(self.p))
            sigma = self._sigma
            return [(p, (1.0 - self.p) / sigma), (1 - p, -self.p / sigma)]
        raise DomainError(f"{self.label} has no finite support")

    # ---------- 표본 ----------

    def sample(self, generator: np.random.Generator, size) -> np.ndarray:
        """표준화된 무질서 표본"""
        if self.kind == DisorderKind.STANDARD_GAUSSIAN:
            return generator.standard_normal(size)
        if self.kind == DisorderKind.RADEMACHER:
            return np.where(generator.random(size) < 0.5, 1.0, -1.0)
        if self.kind == DisorderKind.STANDARDIZED_BERNOULLI:
            sigma = self._sigma
            hits = generator.random(size) < self.p
            return np.where(hits, (1.0 - self.p) / sigma, -self.p / sigma)
        return generator.uniform(-_SQRT3, _SQRT3, size)


# ==================== 로그 적률생성함수 ====================

def _check_beta(model: DisorderModel, beta: float, factor: float = 1.0) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or factor * abs(beta) > model.beta_max:
        raise DomainError(f"|beta|={abs(beta)} (x{factor:g}) exceeds beta_max={model.beta_max} "
                          f"for {model.label}", value=beta)
    return beta


def _log_sinhc(c: float) -> float:
    """log(sinh(c)/c)"""
    c = abs(c)
    if c < _UNIFORM_SERIES_CUTOFF:
        c2 = c * c
        return c2 / 6.0 - c2 * c2 / 180.0 + c2 ** 3 / 2835.0
    if c > 20.0:
        return c - math.log(2.0 * c) + math.log1p(-math.exp(-2.0 * c))
    return math.log(math.sinh(c) / c)


def _log_mgf_unchecked(model: DisorderModel, beta: float) -> float:
    if model.kind == DisorderKind.STANDARD_GAUSSIAN:
        return 0.5 * beta * beta
    if model.kind == DisorderKind.RADEMACHER:
        a = abs(beta)
        return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)
    if model.kind == DisorderKind.STANDARDIZED_BERNOULLI:
        sigma = model._sigma
        return -beta * model.p / sigma + math.log1p(model.p * math.expm1(beta / sigma))
    return _log_sinhc(_SQRT3 * beta)


def log_mgf(model: DisorderModel, beta: float) -> float:
    """Λ(β) = log E[e^{βω}]"""
    beta = _check_beta(model, beta)
    return _log_mgf_unchecked(model, beta)


def log_mgf_mp(model: DisorderModel, beta) -> mpmath.mpf:
    """확장 정밀도 Λ(β) (현재 mpmath 작업 정밀도 사용)"""
    beta = mpmath.mpf(beta)
    if model.kind == DisorderKind.STANDARD_GAUSSIAN:
        return beta * beta / 2
    if model.kind == DisorderKind.RADEMACHER:
        return mpmath.log(mpmath.cosh(beta))
    if model.kind == DisorderKind.STANDARDIZED_BERNOULLI:
        p = mpmath.mpf(model.p)
        sigma = mpmath.sqrt(p * (1 - p))
        return mpmath.log(p * mpmath.exp(beta * (1 - p) / sigma) + (1 - p) * mpmath.exp(-beta * p / sigma))
    c = mpmath.sqrt(3) * beta
    if c == 0:
        return mpmath.mpf(0)
    return mpmath.log(mpmath.sinh(c) / c)


def tilted_variance(model: DisorderModel, beta: float) -> float:
    """V_β = exp(Λ(2β) - 2Λ(β)) - 1"""
    beta = _check_beta(model, beta, factor=2.0)
    return math.expm1(_log_mgf_unchecked(model, 2.0 * beta) - 2.0 * _log_mgf_unchecked(model, beta))


def skew(model: DisorderModel) -> float:
    """τ = E[ω³]"""
    if model.kind == DisorderKind.STANDARDIZED_BERNOULLI:
        return (1.0 - 2.0 * model.p) / model._sigma
    return 0.0


def kurtosis_excess(model: DisorderModel) -> float:
    """κ₄ = E[ω⁴] - 3"""
    if model.kind == DisorderKind.STANDARD_GAUSSIAN:
        return 0.0
    if model.kind == DisorderKind.RADEMACHER:
        return -2.0
    if model.kind == DisorderKind.STANDARDIZED_BERNOULLI:
        pq = model.p * (1.0 - model.p)
        return (1.0 - 6.0 * pq) / pq
    return -1.2


# ==================== 초기 모멘트 ====================

def initial_moment(model: DisorderModel, beta: float, m: int,
                   policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """
    ρ_0^(m)(β) = E[(e^{βω}/E[e^{βω}] - 1)^m]

    Σ_k C(m,k)(-1)^{m-k} exp(Λ(kβ) - kΛ(β)) 를 mpmath 로 계산 (상쇄 방지)
    """
    if m < 2:
        raise DomainError(f"initial_moment needs m >= 2, got {m}", value=m)
    beta = _check_beta(model, beta, factor=float(m))
    if m == 2:
        return tilted_variance(model, beta)
    with mpmath.workprec(policy.working_bits):
        base = log_mgf_mp(model, beta)
        total = mpmath.mpf(0)
        for k in range(m + 1):
            term = mpmath.exp(log_mgf_mp(model, k * mpmath.mpf(beta)) - k * base)
            total += math.comb(m, k) * (-1) ** (m - k) * term
        return float(total)


def initial_moments(model: DisorderModel, beta: float, m_max: int,
                    policy: PrecisionPolicy = DEFAULT_POLICY) -> MomentVector:
    return MomentVector([initial_moment(model, beta, m, policy) for m in range(2, m_max + 1)])


def exact_support(model: DisorderModel, beta: float) -> List[Tuple[Fraction, Fraction]]:
    """
    이산 분포의 (확률, 정규화 가중치) 정확한 유리수 목록

    가중치는 float exp 값을 유리수로 옮긴 뒤 Σ p·w = 1 이 정확히 되도록 정규화
    """
    beta = _check_beta(model, beta)
    support = model.support_values()
    raw = [(probability, Fraction(math.exp(beta * value))) for probability, value in support]
    mean = sum((probability * weight for probability, weight in raw), Fraction(0))
    return [(probability, weight / mean) for probability, weight in raw]


def exact_initial_moments(model: DisorderModel, beta: float, m_max: int) -> MomentVector:
    """정확한 ρ_0^(2..m_max)"""
    support = exact_support(model, beta)
    values = []
    for m in range(2, m_max + 1):
        values.append(sum((probability * (weight - 1) ** m for probability, weight in support),
                          Fraction(0)))
    return MomentVector(values, exact=True)
