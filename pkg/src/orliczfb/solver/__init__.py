"""Free-boundary energy minimization, harmonic replacement and the exact 1D oracle."""
from .almost_min import AlmostMinCert, CompetitorSpec, check_almost_min, local_energy
from .dirichlet import DirichletResult, optimality_residual, solve_dirichlet
from .estimators import AltCaffarelliMinimizer, HarmonicReplacement
from .functional import TAU_REL, DirichletEnergy, Functional, positivity_threshold
from .minimize import SolveOptions, SolveResult, minimize
from .oned import OneDSolution, free_boundary_slope, solve_1d_exact
from .replacement import ReplacementResult, harmonic_extension, harmonic_replacement

__all__ = [
    "AlmostMinCert", "CompetitorSpec", "check_almost_min", "local_energy",
    "DirichletResult", "optimality_residual", "solve_dirichlet",
    "AltCaffarelliMinimizer", "HarmonicReplacement",
    "TAU_REL", "DirichletEnergy", "Functional", "positivity_threshold", "energy",
    "SolveOptions", "SolveResult", "minimize",
    "OneDSolution", "free_boundary_slope", "solve_1d_exact",
    "ReplacementResult", "harmonic_extension", "harmonic_replacement",
]


def energy(functional, field):
    """Exact discrete energy of a nonnegative field."""
    return functional.energy(field)
