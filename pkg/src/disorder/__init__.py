# Disorder Module - bond disorder laws and the critical beta schedule
from src.disorder.laws import (
    BETA_MAX, DisorderKind, DisorderModel,
    exact_initial_moments, exact_support, initial_moment, initial_moments,
    kurtosis_excess, log_mgf, log_mgf_mp, skew, tilted_variance,
)
from src.disorder.scaling import (
    CALIBRATED, LITERAL, BetaSchedule, VFormDiagnostic, beta_schedule, v_form_check,
)

__all__ = [
    "BETA_MAX", "DisorderKind", "DisorderModel",
    "exact_initial_moments", "exact_support", "initial_moment", "initial_moments",
    "kurtosis_excess", "log_mgf", "log_mgf_mp", "skew", "tilted_variance",
    "CALIBRATED", "LITERAL", "BetaSchedule", "VFormDiagnostic", "beta_schedule", "v_form_check",
]
