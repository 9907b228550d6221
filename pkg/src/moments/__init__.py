# Moments Module - recursion polynomials, limit moments and their asymptotics
from src.moments.polynomial import CompiledSystem, SparsePolynomial
from src.moments.recursion import (
    MAX_B, MAX_M, MomentSystem, StructureReport,
    build_pm, build_system, leading_coefficient_check, split_uv, structure_report,
)
from src.moments.engine import (
    compiled_system, iterate_moments, limit_moments, limit_moments_batch, limit_moments_profile,
    limit_moments_series, moment_derivatives, moment_profile, moment_trajectory, series_terms,
    shifted_table,
)
from src.moments.analysis import (
    AsymptoticsReport, DichotomyReport,
    asymptotics_scan, dichotomy_scan, gaussian_constant, is_bounded, moment_bound_ratio,
)

__all__ = [
    "CompiledSystem", "SparsePolynomial",
    "MAX_B", "MAX_M", "MomentSystem", "StructureReport",
    "build_pm", "build_system", "leading_coefficient_check", "split_uv", "structure_report",
    "compiled_system", "iterate_moments", "limit_moments", "limit_moments_batch", "limit_moments_profile",
    "limit_moments_series", "moment_derivatives", "moment_profile", "moment_trajectory", "series_terms",
    "shifted_table",
    "AsymptoticsReport", "DichotomyReport",
    "asymptotics_scan", "dichotomy_scan", "gaussian_constant", "is_bounded", "moment_bound_ratio",
]
