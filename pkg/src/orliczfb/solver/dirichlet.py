"""Convex Dirichlet problems: minimize sum phi(x_c, |grad w|) h^d with fixed nodes.

Descent directions come from nonlinear conjugate gradients preconditioned by
the lagged-diffusivity (Picard) Laplacian frozen at the current gradient. The
step length minimizes the energy along the line, so the energy never
increases.
"""
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse.linalg as spla

__all__ = ["DirichletResult", "solve_dirichlet", "optimality_residual"]

DELTA_SCHEDULE = (1e-2, 1e-4, 1e-6, 1e-8)


@dataclass
class DirichletResult:
    values: np.ndarray
    energy: float
    residual: float
    converged: bool
    iterations: int
    history: list = dc_field(default_factory=list)


def optimality_residual(grad, coef, free, grid):
    """Scale-free first-order residual: max nodal gradient over the typical cell flux."""
    gmax = float(np.max(np.abs(grad[free]), initial=0.0))
    if gmax == 0.0:
        return 0.0
    scale = grid.cell_volume / grid.hmax * float(np.max(coef, initial=0.0))
    return gmax / max(scale, np.finfo(float).tiny)


def _line_search(energy, u, d, delta, E0, slope0):
    """Minimize the convex map a -> E(u + a d) by bracketing and regula falsi."""
    def dphi(a):
        E, G, coef = energy.convex_energy_grad(u + a * d, delta)
        return E, G, coef, float(np.sum(G * d))

    lo, d_lo = 0.0, slope0
    hi = 1.0
    E_hi, G_hi, c_hi, d_hi = dphi(hi)
    for _ in range(30):
        if d_hi >= 0:
            break
        lo, d_lo = hi, d_hi
        hi *= 2.0
        E_hi, G_hi, c_hi, d_hi = dphi(hi)
    best = (E_hi, G_hi, c_hi, hi)
    slack = 8 * np.finfo(float).eps * max(abs(E0), np.finfo(float).tiny)
    if d_hi > 0:
        for _ in range(40):
            a = hi - d_hi * (hi - lo) / (d_hi - d_lo)
            if not lo < a < hi:
                a = 0.5 * (lo + hi)
            E_a, G_a, c_a, d_a = dphi(a)
            if E_a < best[0]:
                best = (E_a, G_a, c_a, a)
            if abs(d_a) <= 0.05 * abs(slope0):
                # near the line minimizer; energies may only differ by rounding here
                if E_a <= E0 + slack:
                    best = (E_a, G_a, c_a, a)
                break
            if d_a < 0:
                lo, d_lo = a, d_a
                d_hi *= 0.5 if d_hi > 0 else 1.0
            else:
                hi, d_hi = a, d_a
                d_lo *= 0.5
    if best[0] > E0 + slack:
        return None
    return best


def _pcg_stage(energy, u, free, delta, tol, max_iter, history, refresh=8):
    """Nonlinear CG (Polak-Ribiere+) preconditioned by the lagged weighted Laplacian.

    The preconditioner is refactorized every ``refresh`` iterations.
    """
    idx = np.flatnonzero(free.ravel())
    E, G, coef = energy.convex_energy_grad(u, delta)
    res = optimality_residual(G, coef, free, energy.grid)
    direction = prev_z = prev_g = None
    it = 0
    solve = None
    while res > tol and it < max_iter:
        if it % refresh == 0:
            A = energy.weighted_laplacian(coef)
            solve = spla.splu(A[idx][:, idx].tocsc(), permc_spec="MMD_AT_PLUS_A").solve
        it += 1
        g = G.ravel()[idx]
        z = solve(g)
        if direction is None:
            step_dir = -z
        else:
            beta = max(0.0, float(z @ (g - prev_g)) / float(prev_z @ prev_g))
            step_dir = -z + beta * direction
            if float(step_dir @ g) >= 0:
                step_dir = -z
        d = np.zeros(u.size)
        d[idx] = step_dir
        d = d.reshape(u.shape)
        slope = float(np.sum(G * d))
        if not slope < 0:
            break
        found = _line_search(energy, u, d, delta, E, slope)
        if found is None:
            break
        E_new, G, coef, a = found
        u = u + a * d
        E = E_new
        direction, prev_z, prev_g = step_dir, z, g
        res = optimality_residual(G, coef, free, energy.grid)
        history.append((delta, E, res))
    return u, E, res, it


def solve_dirichlet(energy, values, free, gtol=1e-8, max_iter=200, deltas=DELTA_SCHEDULE):
    """Minimize the convex energy over nodes where ``free`` is True.

    ``deltas`` is the continuation in the gradient regularization
    ``sqrt(|g|^2 + delta^2)``; intermediate stages are solved loosely.
    """
    u = np.array(values, dtype=float)
    free = np.asarray(free, dtype=bool)
    history = []
    if not free.any():
        E, G, coef = energy.convex_energy_grad(u, 0.0)
        return DirichletResult(u, E, 0.0, True, 0, history)
    total, res = 0, np.inf
    for k, delta in enumerate(deltas):
        last = k == len(deltas) - 1
        tol = gtol if last else max(gtol, 1e-4)
        u, E, res, it = _pcg_stage(energy, u, free, delta, tol,
                                      max_iter if last else max(10, max_iter // 10), history)
        total += it
    E = energy.convex_energy_grad(u, 0.0)[0]
    return DirichletResult(u, E, res, bool(res <= gtol), total, history)
