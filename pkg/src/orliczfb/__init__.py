"""Generalized Orlicz free-boundary toolkit.

Integrands phi(x, t) with their structural checks, discrete minimization of
``int phi(x, |grad v|) + lambda chi_{v > 0}`` on uniform grids, harmonic
replacement, and numerical versions of the regularity estimates.
"""
from .exceptions import (ConfigError, DegenerateBallError, DegenerateNormalizerError, DomainError,
                         ExpressionError, OrliczFBError, PreconditionError, RegularizationError)
from .expr import expr_parse
from .grid import Ball, Field, Grid
from .phi import (DoublePhase, HolderModulus, PerturbedOrlicz, PhiFunction, PowerLaw, Tabulated,
                  VariableExponent, phi_from_dict)
from .regularize import RegularizedPhi, regularize
from .solver import (AltCaffarelliMinimizer, Functional, HarmonicReplacement, SolveOptions,
                     check_almost_min, harmonic_replacement, minimize, solve_1d_exact)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateBallError", "DegenerateNormalizerError", "DomainError",
    "ExpressionError", "OrliczFBError", "PreconditionError", "RegularizationError",
    "expr_parse", "Ball", "Field", "Grid",
    "DoublePhase", "HolderModulus", "PerturbedOrlicz", "PhiFunction", "PowerLaw", "Tabulated",
    "VariableExponent", "phi_from_dict", "RegularizedPhi", "regularize",
    "AltCaffarelliMinimizer", "Functional", "HarmonicReplacement", "SolveOptions",
    "check_almost_min", "harmonic_replacement", "minimize", "solve_1d_exact",
]
