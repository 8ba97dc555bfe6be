"""Harmonic replacement: minimize sum phi(|grad w|) h^d on a ball with w = u on its discrete boundary."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ..grid import Field, embed, restrict
from ..validation import check_ball, check_field
from .dirichlet import solve_dirichlet
from .functional import DirichletEnergy, weighted_laplacian

__all__ = ["ReplacementResult", "harmonic_replacement", "harmonic_extension"]


@dataclass
class ReplacementResult:
    field: Field            # u with the ball interior replaced
    local: Field            # solution on the index window around the ball
    energy: float           # convex energy on the window
    residual: float
    converged: bool
    iterations: int


def harmonic_extension(sub):
    """Discrete Laplace solve with the fixed nodes of ``sub`` as Dirichlet data."""
    free = ~sub.boundary_mask
    u = np.where(free, 0.0, sub.values)
    if not free.any():
        return u
    A = weighted_laplacian(sub.grid, np.ones(sub.grid.cell_shape))
    f = free.ravel()
    rhs = -(A[f][:, ~f] @ u.ravel()[~f])
    x = spla.spsolve(A[f][:, f].tocsc(), rhs)
    out = u.ravel().copy()
    out[f] = x
    return out.reshape(u.shape)


def harmonic_replacement(reg, u, ball, gtol=1e-8, max_iter=200, return_info=False):
    """Replace ``u`` on ``ball`` by the minimizer of the autonomous energy of ``reg``.

    The free nodes are the grid nodes in the open ball (minus nodes on the
    domain boundary); every other node keeps its value. The iteration starts
    from the discrete harmonic extension, which already solves constant and
    linear data exactly.
    """
    check_field(u)
    check_ball(ball, u.grid, inside=True)
    sub = restrict(u, ball)
    start = harmonic_extension(sub)
    energy = DirichletEnergy(reg, sub.grid)
    res = solve_dirichlet(energy, start, ~sub.boundary_mask, gtol=gtol, max_iter=max_iter)
    local = sub.copy(res.values)
    out = ReplacementResult(embed(local, u, ball), local, res.energy, res.residual,
                            res.converged, res.iterations)
    return out if return_info else out.field
