"""
DPM (Diamond Polymer Moments) - Moment Engine
모멘트 벡터 반복, 극한 R_b^(m)(r) (래더 / 프로파일 / 급수), 도함수
"""

import math
import threading
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.core.exceptions import (
    DomainError, IterationOverflow, NotConvergedError, SeriesDivergedError,
)
from src.core.models import (
    BranchingParams, DEFAULT_POLICY, LimitRow, LimitTable, MomentVector, PrecisionPolicy,
)
from src.disorder.laws import DisorderModel, initial_moments
from src.disorder.scaling import CALIBRATED, BetaSchedule, beta_schedule
from src.moments.polynomial import CompiledSystem, SparsePolynomial
from src.moments.recursion import MomentSystem, build_system, split_uv
from src.numerics.extrapolation import extrapolate
from src.numerics.limits import ladder_start_exponent, r_limit, r_limit_derivative
from src.numerics.variance_map import m_inverse

PROFILE_SEED_LEVEL = 1e-3   # 프로파일 시작 깊이 기준 분산
FINITE_CHECK_STEPS = 64     # 래더 반복 중 overflow 검사 주기

_compiled: Dict[Tuple[int, int], CompiledSystem] = {}
_compiled_lock = threading.Lock()


def compiled_system(b: int, m_max: int, system: Optional[MomentSystem] = None) -> CompiledSystem:
    """P_2..P_{m_max} float 평가기 (기본 시스템은 캐시)"""
    if system is not None:
        return CompiledSystem(system.polynomials)
    compiled = _compiled.get((b, m_max))
    if compiled is None:
        built = CompiledSystem(build_system(b, m_max).polynomials)
        with _compiled_lock:
            compiled = _compiled.setdefault((b, m_max), built)
    return compiled


# ==================== 반복 ====================

def iterate_moments(b: int, m_max: int, init: MomentVector, n: int,
                    system: Optional[MomentSystem] = None) -> MomentVector:
    """
    모든 P_m 을 동시에 n 회 적용 (각 단계는 이전 벡터만 읽음)

    init.exact 이면 유리수 정확 계산, 아니면 float (overflow 시 IterationOverflow)
    """
    if init.m_max < m_max:
        raise DomainError(f"init carries m_max={init.m_max} < {m_max}")
    if n < 0:
        raise DomainError(f"iterate_moments needs n >= 0, got {n}", value=n)
    custom = system
    system = system or build_system(b, m_max)
    values = init.values[:m_max - 1]

    if init.exact:
        for _ in range(n):
            values = [p.evaluate(values) for p in system.polynomials]
        return MomentVector(values, exact=True)

    compiled = compiled_system(b, m_max, custom)
    y = np.array([float(v) for v in values])
    for step in range(n):
        y = compiled.evaluate(y)
        if not np.all(np.isfinite(y)):
            raise IterationOverflow(f"iterate_moments overflow after {step + 1} of {n} steps",
                                    steps_completed=step)
    return MomentVector(list(y))


def moment_trajectory(b: int, m_max: int, init: MomentVector, n: int) -> Iterator[np.ndarray]:
    """k = 1..n 의 모멘트 벡터를 차례로 생성"""
    compiled = compiled_system(b, m_max)
    y = init.as_array()[:m_max - 1]
    for step in range(n):
        y = compiled.evaluate(y)
        if not np.all(np.isfinite(y)):
            raise IterationOverflow(f"moment trajectory overflow after {step + 1} steps",
                                    steps_completed=step)
        yield y


# ==================== 래더 경로 ====================

def limit_moments_batch(b: int, m_max: int, model: DisorderModel, r_values: Sequence[float],
                        policy: PrecisionPolicy = DEFAULT_POLICY,
                        form: str = CALIBRATED) -> List[LimitRow]:
    """
    래더 n = 2^k 마다 β = beta_schedule(n), 초기 모멘트, n 회 반복 후 성분별 외삽

    overflow / 수렴 실패는 row.converged=False 와 note 로 표시
    """
    params = BranchingParams(b)
    compiled = compiled_system(b, m_max)
    r_array = [float(r) for r in r_values]
    schedules = [BetaSchedule.for_model(b, model, r, form=form) for r in r_array]
    starts = [ladder_start_exponent(r, policy) for r in r_array]
    exponents = list(range(min(starts), policy.ladder_max_exponent + 1))
    raw = np.full((len(exponents), len(r_array), m_max - 1), np.nan)
    overflowed: Dict[int, int] = {}   # r 인덱스 → overflow 전까지 완료한 단계 수

    for i, k in enumerate(exponents):
        n = 2 ** k
        rows, inits = [], []
        for j, schedule in enumerate(schedules):
            if starts[j] > k or j in overflowed:
                continue
            try:
                beta = beta_schedule(schedule, n, model)
            except DomainError:
                continue
            rows.append(j)
            inits.append(initial_moments(model, beta, m_max, policy).values)
        if not rows:
            continue
        y = np.array(inits, dtype=float)
        alive = np.arange(len(rows))
        step = 0
        while step < n and alive.size:
            span = min(FINITE_CHECK_STEPS, n - step)
            z = y[alive]
            for _ in range(span):
                z = compiled.evaluate(z)
            y[alive] = z
            bad = ~np.all(np.isfinite(z), axis=1)
            if bad.any():
                for position in alive[bad]:
                    overflowed[rows[position]] = step
                    logger.debug(f"limit_moments ladder b={b} r={r_array[rows[position]]}: "
                                 f"overflow after {step} of {n} steps")
                y[alive[bad]] = np.inf
                alive = alive[~bad]
            step += span
        raw[i, rows] = y
        logger.debug(f"limit_moments ladder b={b} n=2^{k}: {len(rows)} rows")

    result = []
    for j, r in enumerate(r_array):
        if j in overflowed:
            result.append(LimitRow(r=r, values=[math.inf] * (m_max - 1), converged_n=overflowed[j],
                                   residuals=[math.inf] * (m_max - 1), converged=False, note="overflow"))
            continue
        used = ~np.isnan(raw[:, j, 0])
        ns = np.array([2 ** k for k, ok in zip(exponents, used) if ok])
        block = raw[used, j, :]
        if block.shape[0] == 0:
            result.append(LimitRow(r=r, values=[math.nan] * (m_max - 1), converged=False,
                                   note="no feasible ladder point"))
            continue
        if not np.all(np.isfinite(block[-1])):
            result.append(LimitRow(r=r, values=[math.inf] * (m_max - 1), converged_n=int(ns[-1]),
                                   residuals=[math.inf] * (m_max - 1), converged=False, note="overflow"))
            continue
        finite = np.all(np.isfinite(block), axis=1)
        values, residuals = [], []
        for column in range(m_max - 1):
            value, residual = extrapolate(ns[finite], block[finite, column])
            values.append(value)
            residuals.append(residual)
        converged = all(res <= policy.cross_tol * max(1.0, abs(v)) for v, res in zip(values, residuals))
        result.append(LimitRow(r=r, values=values, converged_n=int(ns[-1]), residuals=residuals,
                               converged=converged, note="" if converged else "residual above cross_tol"))
    return result


def limit_moments(b: int, m_max: int, model: DisorderModel, r: float,
                  policy: PrecisionPolicy = DEFAULT_POLICY, form: str = CALIBRATED) -> LimitRow:
    """
    R_b^(2..m_max)(r) 래더 경로

    Raises:
        IterationOverflow, NotConvergedError
    """
    BranchingParams(b).require_critical("limit_moments")
    row = limit_moments_batch(b, m_max, model, [r], policy, form)[0]
    if row.note == "overflow":
        raise IterationOverflow(f"limit_moments(b={b}, r={r}) overflow", steps_completed=row.converged_n)
    if not row.converged:
        raise NotConvergedError(f"limit_moments(b={b}, r={r}): {row.note}",
                                achieved=row.residual, n=row.converged_n)
    return row


# ==================== 프로파일 경로 (H_m) ====================

def _profile_depth(params: BranchingParams, x: float, policy: PrecisionPolicy) -> List[float]:
    """x_0 = x 부터 x_j = M^{-j}(x) 를 시작 깊이까지"""
    orbit = [x]
    while orbit[-1] > PROFILE_SEED_LEVEL:
        orbit.append(m_inverse(params, orbit[-1]))
    for _ in range(policy.series_min_terms):
        orbit.append(m_inverse(params, orbit[-1]))
    return orbit


def _profile_pass(b: int, m_max: int, orbit: Sequence[float], keep: int) -> List[np.ndarray]:
    """깊은 곳에서 0 으로 시작해 위로 올라오며 상위 keep 개 행 기록 (행 0 = orbit[0])"""
    compiled = compiled_system(b, m_max)
    depth = len(orbit) - 1
    vector = np.zeros(m_max - 1)
    vector[0] = orbit[depth]
    rows: Dict[int, np.ndarray] = {}
    if depth < keep:
        rows[depth] = vector.copy()
    for j in range(depth, 0, -1):
        vector = compiled.evaluate(vector)
        vector[0] = orbit[j - 1]
        if j - 1 < keep:
            rows[j - 1] = vector.copy()
    return [rows[k] for k in range(min(keep, depth + 1))]


def moment_profile(b: int, m_max: int, x: float,
                   policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    """
    H⃗(x) = (x, H_3(x), ..., H_{m_max}(x)): 현재 분산 x 에서의 극한 모멘트 벡터

    R_b^(m)(r) = H_m(R_b(r))
    """
    params = BranchingParams(b)
    params.require_critical("moment_profile")
    if not x >= 0:
        raise DomainError(f"moment_profile: x must be >= 0, got {x}", value=x)
    if x == 0:
        return np.zeros(m_max - 1)
    return _profile_pass(b, m_max, _profile_depth(params, float(x), policy), keep=1)[0]


def shifted_table(b: int, m_max: int, r: float, depth: int,
                  policy: PrecisionPolicy = DEFAULT_POLICY,
                  r2: Optional[float] = None) -> LimitTable:
    """
    r, r-1, ..., r-depth 행을 한 번의 하강 + 한 번의 프로파일 패스로 생성

    R^(2)(r-k) = M^{-k}(R^(2)(r)), r2 가 없으면 r_limit 사용
    """
    params = BranchingParams(b)
    params.require_critical("shifted_table")
    converged_n, residual = 0, 0.0
    if r2 is None:
        estimate = r_limit(params, r, policy)
        r2, converged_n, residual = estimate.value, estimate.converged_n, estimate.residual

    orbit = [float(r2)]
    for _ in range(depth):
        orbit.append(m_inverse(params, orbit[-1]))
    orbit.extend(_profile_depth(params, orbit[-1], policy)[1:])

    table = LimitTable(b=b, m_max=m_max)
    for k, vector in enumerate(_profile_pass(b, m_max, orbit, keep=depth + 1)):
        table.add(LimitRow(r=float(r) - k, values=[float(v) for v in vector], converged_n=converged_n,
                           residuals=[residual] * (m_max - 1)))
    return table


def limit_moments_profile(b: int, m_max: int, r: float,
                          policy: PrecisionPolicy = DEFAULT_POLICY) -> LimitRow:
    """프로파일 경로의 R_b^(2..m_max)(r)"""
    return shifted_table(b, m_max, r, 0, policy).get(r)


# ==================== 급수 경로 ====================

def _ensure_rows(table: LimitTable, r: float, needed: int, policy: PrecisionPolicy) -> None:
    """r-1..r-needed 행이 없으면 채움"""
    if all(table.has(r - k) for k in range(1, needed + 1)):
        return
    base = table.get(r)
    filled = shifted_table(table.b, table.m_max, r, needed, policy,
                           r2=base[2] if base is not None else None)
    for row in filled.sorted_rows():
        if not table.has(row.r):
            table.add(row)


def series_terms(b: int, m: int, r: float, table: LimitTable,
                 policy: PrecisionPolicy = DEFAULT_POLICY) -> List[float]:
    """
    Σ_k V_m(row r-k) Π_{j<k} (1/b^{m-2} + U_m(row r-j)) 의 항 목록

    Raises:
        SeriesDivergedError: 누적 곱이 1 초과
        NotConvergedError: 항 수 한도 초과
    """
    if m < 3:
        raise DomainError(f"series route needs m >= 3, got {m}", value=m)
    if table.m_max < m or table.b != b:
        raise DomainError(f"table (b={table.b}, m_max={table.m_max}) cannot serve b={b}, m={m}")
    u_part, v_part = split_uv(build_system(b, m).pm(m), b, m)
    evaluator = CompiledSystem([u_part, v_part])
    leading = 1.0 / b ** (m - 2)

    chunk = policy.series_min_terms + 50
    limit = 2 ** policy.ladder_max_exponent
    terms: List[float] = []
    total, product, k = 0.0, 1.0, 0
    while True:
        k += 1
        if k > limit:
            raise NotConvergedError(f"series(b={b}, m={m}, r={r}) term limit reached", n=k)
        if not table.has(r - k):
            _ensure_rows(table, r, k - 1 + chunk, policy)
        row = np.array(table.get(r - k).values[:m - 1])
        u_value, v_value = evaluator.evaluate(row)
        term = v_value * product
        terms.append(float(term))
        total += term
        product *= leading + u_value
        if product > 1:
            raise SeriesDivergedError(f"series(b={b}, m={m}, r={r}): running product {product:.4g} > 1",
                                      k=k, product=product)
        if k >= policy.series_min_terms and abs(term) < policy.series_tail_tol * abs(total):
            break
    return terms


def limit_moments_series(b: int, m: int, r: float, table: Optional[LimitTable] = None,
                         policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """R_b^(m)(r) 급수 경로"""
    BranchingParams(b).require_critical("limit_moments_series")
    table = table if table is not None else LimitTable(b=b, m_max=m)
    terms = series_terms(b, m, r, table, policy)
    value = math.fsum(terms)
    logger.debug(f"limit_moments_series(b={b}, m={m}, r={r}) = {value:.12g} ({len(terms)} terms)")
    return value


# ==================== 도함수 ====================

def moment_derivatives(b: int, m_max: int, r: float, table: Optional[LimitTable] = None,
                       policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    """
    (R^(2)'(r), ..., R^(m_max)'(r))

    R⃗'(r) = Σ_k D̃P(r-1)...D̃P(r-k+1) ∂_1P(r-k) R^(2)'(r-k),
    D̃P = (∂P_i/∂y_j)_{i,j ∈ 3..m_max}, R^(2)'(r-1) = R^(2)'(r)/(1+R^(2)(r-1))^{b-1}
    """
    params = BranchingParams(b)
    params.require_critical("moment_derivatives")
    d2 = r_limit_derivative(params, r, policy)
    if m_max == 2:
        return np.array([d2])

    table = table if table is not None else LimitTable(b=b, m_max=m_max)
    if table.m_max < m_max:
        raise DomainError(f"table m_max={table.m_max} < {m_max}")
    system = build_system(b, m_max)
    size = m_max - 2
    partials: List[SparsePolynomial] = []
    for i in range(3, m_max + 1):
        partials.append(system.pm(i).diff(2))
        for j in range(3, m_max + 1):
            partials.append(system.pm(i).diff(j))
    evaluator = CompiledSystem(partials)

    chunk = policy.series_min_terms + 50
    limit = 2 ** policy.ladder_max_exponent
    transport = np.eye(size)
    total = np.zeros(size)
    derivative = d2
    k = 0
    while True:
        k += 1
        if k > limit:
            raise NotConvergedError(f"moment_derivatives(b={b}, r={r}) term limit reached", n=k)
        if not table.has(r - k):
            _ensure_rows(table, r, k - 1 + chunk, policy)
        row = np.array(table.get(r - k).values[:m_max - 1])
        derivative /= (1.0 + row[0]) ** (b - 1)
        values = evaluator.evaluate(row).reshape(size, size + 1)
        gradient, jacobian = values[:, 0], values[:, 1:]
        term = transport @ gradient * derivative
        total += term
        transport = transport @ jacobian
        if k >= policy.series_min_terms and np.linalg.norm(term) < policy.series_tail_tol * np.linalg.norm(total):
            break
    return np.concatenate([[d2], total])
