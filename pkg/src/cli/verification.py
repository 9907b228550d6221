"""
DPM (Diamond Polymer Moments) - Verification Suite
다항식 구조, 두 경로 일치, 점근식, 이분법 등 속성 검사 모음
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from loguru import logger
from typing_extensions import TypeAlias

from src.core.exceptions import DPMException
from src.core.models import BranchingParams, DEFAULT_POLICY, LimitTable, PrecisionPolicy
from src.disorder.laws import DisorderModel, exact_initial_moments
from src.moments.analysis import (
    DIVERGING, VANISHING, asymptotics_scan, dichotomy_scan, is_bounded, moment_bound_ratio,
)
from src.moments.engine import (
    iterate_moments, limit_moments_batch, limit_moments_profile, limit_moments_series,
    moment_derivatives,
)
from src.moments.polynomial import SparsePolynomial
from src.moments.recursion import PolynomialHook, build_system, leading_coefficient_check, structure_report
from src.numerics.inversion import g_inverse
from src.numerics.limits import r_limit, r_limit_batch
from src.numerics.variance_map import critical_constants, m_map
from src.simulator.sampler import enumerate_small

CheckOutcome: TypeAlias = Tuple[bool, float, str]


@dataclass
class CheckResult:
    """검사 하나의 결과"""
    name: str
    claim: str
    passed: bool
    residual: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "claim": self.claim, "passed": self.passed,
                "residual": self.residual if math.isfinite(self.residual) else repr(self.residual),
                "detail": self.detail}


def _relative(a: float, c: float) -> float:
    return abs(a - c) / max(abs(c), 1e-300)


class VerificationSuite:
    """
    이름 붙은 검사들을 순서대로 실행

    polynomial_hook(m, P_m) 은 다항식 기반 검사에 주입되는 변형 (음성 대조군)
    """

    def __init__(self, policy: PrecisionPolicy = DEFAULT_POLICY,
                 polynomial_hook: Optional[PolynomialHook] = None):
        self.policy = policy
        self.hook = polynomial_hook
        self._checks: Dict[str, Tuple[str, Callable[[], CheckOutcome]]] = {
            "pm_identity": ("P_2 equals the variance map as a polynomial", self.check_pm_identity),
            "pm_structure": ("P_m: no constant, unique linear term, nonnegative, weight rules",
                             self.check_pm_structure),
            "leading_coefficient": ("x^{m/2} coefficient of V_m matches the generating function",
                                    self.check_leading_coefficient),
            "enumeration_oracle": ("exact enumeration equals one recursion step",
                                   self.check_enumeration_oracle),
            "variance_shift": ("M_b(R_b(r)) = R_b(r+1)", self.check_variance_shift),
            "variance_two_route": ("ladder R_b(r) equals G_b^{-1}(-r)", self.check_variance_two_route),
            "variance_asymptotics": ("R_b(r) remainder after two terms is O(log^2|r|/|r|^3)",
                                     self.check_variance_asymptotics),
            "limit_table": ("limit moments positive, increasing and shift-consistent",
                            self.check_limit_table),
            "model_independence": ("limit moments do not depend on the disorder law",
                                   self.check_model_independence),
            "series_route": ("series route equals ladder route", self.check_series_route),
            "derivative_series": ("derivative series equals finite differences",
                                  self.check_derivative_series),
            "gaussian_moments": ("|r|^{m/2} R^(m)(r) tends to the Gaussian constant",
                                 self.check_gaussian_moments),
            "moment_bound": ("|rho^(m)|/(rho^(2))^{m/2} bounded along trajectories",
                             self.check_moment_bound),
            "dichotomy": ("t/sqrt(n) start vanishes below kappa and diverges above",
                          self.check_dichotomy),
        }

    @property
    def names(self) -> List[str]:
        return list(self._checks)

    # ---------- 실행 ----------

    def run(self, names: Optional[Sequence[str]] = None) -> List[CheckResult]:
        selected = list(names) if names else self.names
        results = []
        for name in selected:
            claim, check = self._checks[name]
            try:
                passed, residual, detail = check()
            except DPMException as e:
                passed, residual, detail = False, math.inf, str(e)
            result = CheckResult(name=name, claim=claim, passed=bool(passed), residual=float(residual),
                                 detail=detail)
            if result.passed:
                logger.success(f"verify {name}: residual={result.residual:.3g}")
            else:
                logger.warning(f"verify {name} FAILED: residual={result.residual:.3g} {detail}")
            results.append(result)
        return results

    def _pm(self, b: int, m: int) -> SparsePolynomial:
        return build_system(b, m, self.hook).pm(m)

    # ---------- 다항식 ----------

    def check_pm_identity(self) -> CheckOutcome:
        mismatch = Fraction(0)
        for b in (2, 3, 4, 5):
            y2 = SparsePolynomial.variable(1, 2)
            expected = ((1 + y2) ** b - 1) * Fraction(1, b)
            difference = self._pm(b, 2) - expected
            mismatch += sum((abs(c) for c in difference.terms.values()), Fraction(0))
        return mismatch == 0, float(mismatch), "b in 2..5"

    def check_pm_structure(self) -> CheckOutcome:
        failures, findings = [], 0
        for b in (2, 3):
            for m in range(3, 9):
                report = structure_report(self._pm(b, m), b, m)
                findings += len(report.findings)
                if not report.passed:
                    failures.append(f"(b={b}, m={m})")
        detail = f"failed {failures}" if failures else f"{findings} logged findings"
        return not failures, float(len(failures)), detail

    def check_leading_coefficient(self) -> CheckOutcome:
        total = Fraction(0)
        for b, m in ((2, 4), (3, 4), (2, 6)):
            total += leading_coefficient_check(b, m)
        return total == 0, float(total), "(2,4) (3,4) (2,6)"

    def check_enumeration_oracle(self) -> CheckOutcome:
        model = DisorderModel.parse("rademacher")
        worst = Fraction(0)
        system = build_system(2, 4, self.hook) if self.hook else None
        for beta in (0.3, 0.5):
            enumerated = enumerate_small(2, model, beta, 1, m_max=4)
            init = exact_initial_moments(model, beta, 4)
            recursed = iterate_moments(2, 4, init, 1, system=system)
            for a, c in zip(enumerated.values, recursed.values):
                worst = max(worst, abs(Fraction(a) - Fraction(c)))
        return worst == 0, float(worst), "b=s=2, n=1, rademacher beta in {0.3, 0.5}"

    # ---------- 분산 ----------

    def check_variance_shift(self) -> CheckOutcome:
        worst = 0.0
        for b in (2, 3):
            params = BranchingParams(b)
            grid = [float(r) for r in range(-10, 3)]
            estimates = r_limit_batch(params, grid, self.policy)
            for low, high in zip(estimates, estimates[1:]):
                worst = max(worst, abs(m_map(params, low.value) - high.value))
        return worst <= 1e-6, worst, "r in -10..1, b in {2, 3}"

    def check_variance_two_route(self) -> CheckOutcome:
        params = BranchingParams(2)
        worst = 0.0
        for r in (-200.0, -100.0, -50.0, -20.0, -5.0):
            worst = max(worst, abs(r_limit(params, r, self.policy).value - g_inverse(params, -r, self.policy)))
        return worst <= 1e-4, worst, "b=2, r in {-200, -100, -50, -20, -5}"

    def check_variance_asymptotics(self) -> CheckOutcome:
        verdicts, last = [], 0.0
        for b in (2, 3):
            report = asymptotics_scan(b, 2, (-50, -100, -200, -400), policy=self.policy)
            verdicts.append(is_bounded(report.variance_remainder))
            last = max(last, report.variance_remainder[-1])
        return all(verdicts), last, "scaled by |r|^3/log^2|r|"

    # ---------- 극한 모멘트 ----------

    def check_limit_table(self) -> CheckOutcome:
        b, m_max = 2, 4
        grid = [float(r) for r in range(-10, 1)]
        rows = limit_moments_batch(b, m_max, DisorderModel.parse("gaussian"), grid, self.policy)
        table = LimitTable(b=b, m_max=m_max)
        for row in rows:
            table.add(row)
        system = build_system(b, m_max, self.hook)
        worst = 0.0
        for low, high in zip(rows, rows[1:]):
            for m in range(2, m_max + 1):
                shifted = float(system.pm(m).evaluate(low.values))
                worst = max(worst, _relative(shifted, high[m]))
        passed = table.is_monotone() and all(row.converged for row in rows) and worst <= self.policy.cross_tol
        return passed, worst, f"b={b}, r in -10..0, relative shift residual"

    def check_model_independence(self) -> CheckOutcome:
        r = -5.0
        gaussian = limit_moments_batch(2, 4, DisorderModel.parse("gaussian"), [r], self.policy)[0]
        rademacher = limit_moments_batch(2, 4, DisorderModel.parse("rademacher"), [r], self.policy)[0]
        worst, passed = 0.0, True
        for m in range(2, 5):
            difference = abs(gaussian[m] - rademacher[m])
            allowed = max(2.0 * (gaussian.residuals[m - 2] + rademacher.residuals[m - 2]),
                          self.policy.cross_tol * max(1.0, abs(gaussian[m])))
            worst = max(worst, difference)
            passed &= difference <= allowed
        return passed, worst, "gaussian vs rademacher, b=2, r=-5"

    def check_series_route(self) -> CheckOutcome:
        b = 2
        worst = 0.0
        for r in (-20.0, -10.0):
            ladder = limit_moments_batch(b, 4, DisorderModel.parse("gaussian"), [r], self.policy)[0]
            table = LimitTable(b=b, m_max=4)
            for m in (3, 4):
                worst = max(worst, _relative(limit_moments_series(b, m, r, table, self.policy), ladder[m]))
        return worst <= 1e-4, worst, "b=2, m in {3, 4}, r in {-20, -10}"

    def check_derivative_series(self) -> CheckOutcome:
        b, m_max, h = 2, 4, 1e-3
        worst = 0.0
        for r in (-20.0, -15.0, -10.0):
            series = moment_derivatives(b, m_max, r, policy=self.policy)
            upper = limit_moments_profile(b, m_max, r + h, self.policy)
            lower = limit_moments_profile(b, m_max, r - h, self.policy)
            for m in range(2, m_max + 1):
                finite = (upper[m] - lower[m]) / (2 * h)
                worst = max(worst, _relative(series[m - 2], finite))
        return worst <= 1e-3, worst, "b=2, m <= 4, centered differences h=1e-3"

    def check_gaussian_moments(self) -> CheckOutcome:
        report = asymptotics_scan(2, 6, (-50, -100, -200, -400), policy=self.policy)
        error4 = abs(report.gaussian_ratio[4] - 1)
        error6 = abs(report.gaussian_ratio[6] - 1)
        passed = error4 <= 0.05 and error6 <= 0.10 and report.bounded[3]
        return passed, max(error4, error6), f"ratio m=4 {report.gaussian_ratio[4]:.6f}, m=6 {report.gaussian_ratio[6]:.6f}"

    def check_moment_bound(self) -> CheckOutcome:
        model = DisorderModel.parse("gaussian")
        verdicts, largest = [], 0.0
        for m in (3, 4):
            ratios = [moment_bound_ratio(2, m, model, -10.0, 2 ** k, self.policy) for k in range(8, 17, 2)]
            verdicts.append(is_bounded(ratios))
            largest = max(largest, max(ratios))
        return all(verdicts), largest, "b=2, r=-10, n in 2^8..2^16"

    def check_dichotomy(self) -> CheckOutcome:
        failures = []
        for b in (2, 3):
            kappa = critical_constants(BranchingParams(b)).kappa
            report = dichotomy_scan(b, (0.9 * kappa, 1.1 * kappa), [2 ** 16])
            if report.verdict(0.9 * kappa) != VANISHING:
                failures.append(f"b={b} t=0.9 kappa")
            if report.verdict(1.1 * kappa) != DIVERGING:
                failures.append(f"b={b} t=1.1 kappa")
        return not failures, float(len(failures)), ", ".join(failures) or "n=2^16, b in {2, 3}"
