"""Quantitative estimates evaluated on discrete fields."""
from .blowup import BlowupRun, blowup_run, euler_lagrange_residual
from .decay import gradient_excess_decay, holder_seminorm, morrey_decay
from .free_boundary import (free_boundary_mask, free_boundary_points, growth_dichotomy,
                            lipschitz_certificate, nearest_free_boundary_point)
from .maximal import maximal_function
from .ratios import (caccioppoli_ratio, comparison_estimate, gamma_exponent, poincare_check,
                     reverse_holder, small_radius)
from .report import EstimateReport, Row, fit_loglog, stability

__all__ = [
    "BlowupRun", "blowup_run", "euler_lagrange_residual",
    "gradient_excess_decay", "holder_seminorm", "morrey_decay",
    "free_boundary_mask", "free_boundary_points", "growth_dichotomy", "lipschitz_certificate",
    "nearest_free_boundary_point", "maximal_function",
    "caccioppoli_ratio", "comparison_estimate", "gamma_exponent", "poincare_check",
    "reverse_holder", "small_radius",
    "EstimateReport", "Row", "fit_loglog", "stability",
]
