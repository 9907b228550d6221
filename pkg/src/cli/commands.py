"""
DPM (Diamond Polymer Moments) - Batch Commands
constants / maps / pm / limits / mc / verify 명령 구현
"""

import math
from typing import Any, Dict, List, Optional

from loguru import logger

from src.cli.config import RunConfig, config_hash
from src.cli.reports import output_path, write_json, write_table
from src.cli.verification import VerificationSuite
from src.core.exceptions import DPMException, NotConvergedError, VerificationFailure
from src.core.models import LimitRow
from src.disorder.laws import initial_moments
from src.disorder.scaling import BetaSchedule, beta_schedule
from src.moments.analysis import gaussian_constant
from src.moments.engine import iterate_moments, limit_moments_batch, limit_moments_profile
from src.moments.recursion import PolynomialHook, build_pm, build_system, split_uv, structure_report
from src.numerics.inversion import g_inverse
from src.numerics.limits import r_limit_batch
from src.numerics.series import d_product
from src.numerics.variance_map import critical_constants, m_map
from src.simulator.pool import pool_evolve, write_pool_binary
from src.simulator.statistics import empirical_moments

GAP_SE = 4.0             # mc 허용 표준오차 배수
G_INVERSE_MAX_R = -5.0   # maps: g_inverse 를 함께 계산하는 r 상한


def cmd_constants(config: RunConfig) -> Dict[str, Any]:
    """κ_b, η_b 와 짝수 m 의 가우시안 상수"""
    constants = critical_constants(config.params)
    rows = []
    for m in range(2, max(config.m_max, 2) + 1, 2):
        rows.append({
            "b": config.b, "kappa": constants.kappa, "kappa_sq": str(constants.kappa_sq),
            "eta": constants.eta, "eta_exact": str(constants.eta_exact),
            "m": m, "gaussian_constant": gaussian_constant(config.b, m),
        })
    logger.info(f"b={config.b}: kappa={constants.kappa:.8f} eta={constants.eta:.8f}")
    path = write_table(rows, config, f"constants_b{config.b}")
    return {"paths": [str(path)], "rows": rows}


def cmd_maps(config: RunConfig) -> Dict[str, Any]:
    """r 격자 위 R_b(r), 잔차, G_b^{-1}(-r), R_b'(r), 이동식 잔차"""
    params, policy = config.params, config.policy
    grid = config.r_grid()
    estimates = r_limit_batch(params, grid + [r + 1 for r in grid], policy)
    current, shifted = estimates[:len(grid)], estimates[len(grid):]
    kappa_sq = float(critical_constants(params).kappa_sq)

    rows = []
    for r, estimate, following in zip(grid, current, shifted):
        value = estimate.value
        converged = math.isfinite(value) and estimate.residual <= policy.cross_tol * max(1.0, abs(value))
        row = {"r": r, "R": value, "residual": estimate.residual, "converged_n": estimate.converged_n,
               "converged": converged, "g_inverse": math.nan, "derivative": math.nan,
               "shift_residual": math.nan}
        if math.isfinite(value):
            if r <= G_INVERSE_MAX_R:
                row["g_inverse"] = g_inverse(params, -r, policy)
            try:
                row["derivative"] = kappa_sq * d_product(params, value, policy).value
            except NotConvergedError as e:
                logger.warning(f"maps r={r}: derivative skipped ({e})")
            if math.isfinite(following.value):
                row["shift_residual"] = abs(m_map(params, value) - following.value)
        rows.append(row)
    logger.info(f"maps b={config.b}: {len(rows)} rows, {sum(not r['converged'] for r in rows)} unconverged")
    path = write_table(rows, config, f"maps_b{config.b}")
    return {"paths": [str(path)], "rows": rows}


def cmd_pm(config: RunConfig) -> Dict[str, Any]:
    """P_m, U_m, V_m JSON 파일과 구조 요약"""
    b = config.b
    paths, summary = [], []
    for m in range(2, config.m_max + 1):
        pm = build_pm(b, m)
        paths.append(write_json(pm.to_json_dict(b, m), output_path(config, f"pm_b{b}_m{m}", "json")))
        if m == 2:
            summary.append({"m": 2, "terms": len(pm), "degree": pm.degree(),
                            "linear_terms": {str(k): str(v) for k, v in pm.linear_terms().items()}})
            continue
        u_part, v_part = split_uv(pm, b, m)
        paths.append(write_json(u_part.to_json_dict(b, m), output_path(config, f"um_b{b}_m{m}", "json")))
        paths.append(write_json(v_part.to_json_dict(b, m), output_path(config, f"vm_b{b}_m{m}", "json")))
        summary.append(structure_report(pm, b, m).to_dict())
    summary_path = write_json({"b": b, "m_max": config.m_max, "config_hash": config_hash(config),
                               "structure": summary}, output_path(config, f"pm_b{b}_summary", "json"))
    paths.append(summary_path)
    logger.info(f"pm b={b}: wrote {len(paths)} files")
    return {"paths": [str(p) for p in paths], "structure": summary}


def _limit_rows(config: RunConfig, r_values: List[float]) -> Dict[float, LimitRow]:
    if config.route == "ladder":
        rows = limit_moments_batch(config.b, config.m_max, config.disorder, r_values, config.policy,
                                   config.schedule_form)
        return {row.r: row for row in rows}
    result = {}
    for r in r_values:
        try:
            result[r] = limit_moments_profile(config.b, config.m_max, r, config.policy)
        except DPMException as e:
            result[r] = LimitRow(r=r, values=[math.nan] * (config.m_max - 1), converged=False, note=str(e))
    return result


def cmd_limits(config: RunConfig) -> Dict[str, Any]:
    """R^(2..m_max)(r) 테이블 + 이동식 잔차 + |r|^{⌈m/2⌉} 스케일 열"""
    grid = config.r_grid()
    extra = [r + 1 for r in grid if r + 1 not in grid]
    rows = _limit_rows(config, grid + extra)
    system = build_system(config.b, config.m_max)

    table = []
    for r in grid:
        row = rows[r]
        data = row.to_dict()
        data["note"] = row.note
        following = rows.get(r + 1)
        shift = math.nan
        if following is not None and row.converged and following.converged:
            shift = max(abs(float(system.pm(m).evaluate(row.values)) - following[m]) / max(abs(following[m]), 1e-300)
                        for m in range(2, config.m_max + 1))
        data["shift_residual"] = shift
        for m in range(2, config.m_max + 1):
            data[f"scaled_{m}"] = abs(r) ** ((m + 1) // 2) * row[m] if r < 0 else math.nan
        table.append(data)

    unconverged = [d["r"] for d in table if not d["converged"]]
    if unconverged:
        logger.warning(f"limits: rows not converged at r={unconverged}")
    logger.info(f"limits b={config.b} m_max={config.m_max} route={config.route}: {len(table)} rows")
    path = write_table(table, config, f"limits_b{config.b}_m{config.m_max}")
    return {"paths": [str(path)], "rows": table}


def cmd_mc(config: RunConfig) -> Dict[str, Any]:
    """
    풀 몬테카를로 vs 정확한 모멘트 점화식 (4 SE 게이트, ρ^(2), ρ^(3))

    Raises:
        VerificationFailure: 게이트 실패
    """
    model, b = config.disorder, config.b
    if config.beta is not None:
        beta = float(config.beta)
    else:
        schedule = BetaSchedule.for_model(b, model, config.mc_r, form=config.schedule_form)
        beta = beta_schedule(schedule, config.generations, model)

    pool = pool_evolve(b, model, beta, config.generations, config.pool_size, config.seed,
                       s=config.s, workers=config.workers)
    empirical = empirical_moments(pool, config.m_max)
    exact: Optional[List[float]] = None
    if config.params.is_critical:
        init = initial_moments(model, beta, config.m_max, config.policy)
        exact = [float(v) for v in iterate_moments(b, config.m_max, init, config.generations).values]

    rows, failed = [], []
    for m in range(2, config.m_max + 1):
        reference = exact[m - 2] if exact else math.nan
        gap = abs(empirical[m] - reference)
        passed = gap <= GAP_SE * empirical.se(m) if exact else True
        rows.append({"m": m, "empirical": empirical[m], "se": empirical.se(m), "recursion": reference,
                     "gap": gap, "passed": passed})
        if m <= 3 and not passed:
            failed.append(f"rho_{m}")
    drift_ok = all(stats.drift_ok for stats in pool.history)

    paths = [write_table(rows, config, "mc_report"),
             write_pool_binary(pool, output_path(config, f"pool_g{pool.generation}", "bin"))]
    summary = {"beta": beta, "model": model.label, "lineage": pool.lineage(), "mean": empirical.mean,
               "count": empirical.count, "batches": empirical.batches, "drift_ok": drift_ok,
               "passed": not failed, "config_hash": config_hash(config)}
    paths.append(write_json(summary, output_path(config, "mc_summary", "json")))

    if failed:
        raise VerificationFailure(f"mc gate failed for {failed} at {GAP_SE} SE", failed=failed)
    logger.info(f"mc b={b} {model.label} beta={beta:.6g}: gate passed, drift ok={drift_ok}")
    return {"paths": [str(p) for p in paths], "rows": rows, "summary": summary}


def cmd_verify(config: RunConfig, polynomial_hook: Optional[PolynomialHook] = None,
               names: Optional[List[str]] = None) -> Dict[str, Any]:
    """
    속성 검사 모음 실행, 검사별 JSON 기록

    Raises:
        VerificationFailure: 하나라도 실패
    """
    suite = VerificationSuite(config.policy, polynomial_hook)
    results = suite.run(names)
    path = write_json({"config_hash": config_hash(config), "checks": [r.to_dict() for r in results]},
                      output_path(config, "verify", "json"))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise VerificationFailure(f"{len(failed)} of {len(results)} checks failed: {failed}", failed=failed)
    return {"paths": [str(path)], "checks": [r.to_dict() for r in results]}


COMMAND_TABLE = {
    "constants": cmd_constants,
    "maps": cmd_maps,
    "pm": cmd_pm,
    "limits": cmd_limits,
    "mc": cmd_mc,
    "verify": cmd_verify,
}


def dispatch(config: RunConfig) -> Dict[str, Any]:
    return COMMAND_TABLE[config.command](config)
