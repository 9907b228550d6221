# Numerics Module - variance map and auxiliary analytic functions
from src.numerics.variance_map import (
    critical_constants, m_map, m_inverse, m_iterate, m_iterate_mp, tilde_coefficients,
)
from src.numerics.auxiliary import aux_functions, f_b, h_b, h_hat_b, taylor_data, tilde_map
from src.numerics.series import s_series, d_product, d_product_partial, f_series
from src.numerics.inversion import delta_threshold, g_func, g_inverse, g_inverse_asymptote
from src.numerics.limits import initial_variance, r_limit, r_limit_batch, r_limit_derivative

__all__ = [
    "critical_constants", "m_map", "m_inverse", "m_iterate", "m_iterate_mp", "tilde_coefficients",
    "aux_functions", "f_b", "h_b", "h_hat_b", "taylor_data", "tilde_map",
    "s_series", "d_product", "d_product_partial", "f_series",
    "delta_threshold", "g_func", "g_inverse", "g_inverse_asymptote",
    "initial_variance", "r_limit", "r_limit_batch", "r_limit_derivative",
]
