"""Discrete minimization of the free-boundary energy.

Stage 1 (continuation): L-BFGS-B with bounds ``v >= 0`` on the smoothed energy
with indicator ``1 - prod_k (1 - min(v_k/eps, 1))`` per cell and gradient
modulus ``sqrt(|g|^2 + delta^2)``, for geometric schedules of ``eps`` and
``delta``. A coarse-to-fine sequence of grids provides the starting points.

Stage 2 (polish): exact-energy moves, each accepted only on strict decrease:

* truncations ``max(u - s, 0)`` over a geometric grid of shifts,
* coordinate moves on a 4-colouring (2-colouring in 1D) of the free nodes,
  trying 0 and the minimizer of the convex part of the local energy,
* re-solving the convex problem with the zero set frozen,
* growing or shrinking the positivity set by one node layer.
"""
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy.optimize import Bounds, minimize as sp_minimize

from ..exceptions import PreconditionError
from ..grid import Field
from .dirichlet import solve_dirichlet
from .functional import TAU_REL, DirichletEnergy, Functional

__all__ = ["SolveOptions", "SolveResult", "minimize", "prolong"]


@dataclass
class SolveOptions:
    eps0_rel: float = 0.1          # first smoothing width, relative to the data sup
    eps_min: float = 1e-6
    delta0: float = 1e-2
    delta_min: float = 1e-8
    n_stages: int = 6
    gtol: float = 1e-8             # relative energy decrease per L-BFGS stage
    max_iter: int = 3000
    max_polish_rounds: int = 40
    n_shifts: int = 48
    multilevel: bool = True
    coarsest_cells: int = 16
    fine_stages: int = 2
    seed: int = 0

    def __post_init__(self):
        if not (self.eps0_rel > 0 and self.eps_min > 0 and self.delta0 >= self.delta_min > 0):
            raise ValueError("smoothing parameters must be positive and decreasing")
        if self.n_stages < 1 or self.fine_stages < 1:
            raise ValueError("need at least one continuation stage")
        if not self.gtol > 0:
            raise ValueError("gtol must be positive")

    def schedules(self, scale):
        eps0 = max(self.eps0_rel * scale, self.eps_min)
        eps = np.geomspace(eps0, self.eps_min, self.n_stages) if self.n_stages > 1 else np.array([self.eps_min])
        delta = np.geomspace(self.delta0, self.delta_min, self.n_stages) if self.n_stages > 1 else np.array([self.delta_min])
        return eps, delta

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveResult:
    field: Field
    energy: float
    converged: bool
    smoothed_stage_energy: float
    log: list = dc_field(default_factory=list)


def prolong(values, coarse, fine):
    """Piecewise-linear interpolation from ``coarse`` nodes to ``fine`` nodes."""
    out = np.asarray(values, dtype=float)
    for axis, (xc, xf) in enumerate(zip(coarse.axes(), fine.axes())):
        out = np.apply_along_axis(lambda col: np.interp(xf, xc, col), axis, out)
    return out


def _colour_masks(shape, d):
    idx = np.indices(shape)
    if d == 1:
        return [idx[0] % 2 == c for c in range(2)]
    return [(idx[0] % 2 == a) & (idx[1] % 2 == b) for a in range(2) for b in range(2)]


def _neighbour_extrema(u):
    pad = np.pad(u, 1, mode="edge")
    d = u.ndim
    lo, hi = u.copy(), u.copy()
    shifts = [(-1,), (1,)] if d == 1 else [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    for sh in shifts:
        sl = tuple(slice(1 + s, 1 + s + n) for s, n in zip(sh, u.shape))
        lo = np.minimum(lo, pad[sl])
        hi = np.maximum(hi, pad[sl])
    return lo, hi


def _axis_neighbours(mask):
    out = np.zeros_like(mask)
    for axis in range(mask.ndim):
        out |= np.roll(mask, 1, axis) & _edge_ok(mask.shape, axis, 1)
        out |= np.roll(mask, -1, axis) & _edge_ok(mask.shape, axis, -1)
    return out


def _edge_ok(shape, axis, shift):
    ok = np.ones(shape, dtype=bool)
    idx = [slice(None)] * len(shape)
    idx[axis] = 0 if shift == 1 else -1
    ok[tuple(idx)] = False
    return ok


class _Polisher:
    def __init__(self, F, fixed, tau, opts, rng):
        self.F, self.fixed, self.free = F, fixed, ~fixed
        self.tau, self.opts, self.rng = tau, opts, rng

    def energy(self, u):
        return float(np.sum(self.F.cell_energy(u, self.tau)))

    def better(self, E_new, E_old):
        return E_new < E_old - 1e-13 * max(abs(E_old), 1e-300)

    def truncations(self, u, E):
        top = float(np.max(u[self.free], initial=0.0))
        if top <= self.tau:
            return u, E
        best_u, best_E = u, E
        for s in np.geomspace(1e-9 * top, top, self.opts.n_shifts):
            cand = u.copy()
            cand[self.free] = np.maximum(u[self.free] - s, 0.0)
            Ec = self.energy(cand)
            if self.better(Ec, best_E):
                best_u, best_E = cand, Ec
        return best_u, best_E

    def _active(self, u):
        """Free nodes within two layers of a sign change of ``u > tau``."""
        positive = u > self.tau
        edge = _axis_neighbours(positive) & ~positive
        edge |= _axis_neighbours(~positive) & positive
        pad = np.pad(edge, 2)
        near = np.zeros_like(edge)
        for sh in np.ndindex(*(5,) * u.ndim):
            near |= pad[tuple(slice(k, k + n) for k, n in zip(sh, u.shape))]
        return near & self.free

    def sweep(self, u, E, max_passes=1):
        """Exact coordinate minimization on the nodes near the free boundary.

        Each node's local energy involves only its 3^d patch; nodes of one
        colour share no cell, so their moves are independent and applied at once.
        """
        colours = _colour_masks(u.shape, u.ndim)
        u = u.copy()
        changed = False
        for _ in range(max_passes):
            moved = 0
            for c in self.rng.permutation(len(colours)):
                K = np.argwhere(colours[c] & self._active(u))
                if K.size == 0:
                    continue
                moved += self._move_nodes(u, K)
            changed |= moved > 0
            if moved == 0:
                break
        if not changed:
            return u, E
        return u, self.energy(u)

    def _move_nodes(self, u, K):
        d = u.ndim
        offs = np.array(list(np.ndindex(*(3,) * d))) - 1
        pad = np.pad(u, 1, mode="edge")
        patch = pad[tuple((K[:, None, a] + 1 + offs[None, :, a]) for a in range(d))]
        patch = patch.reshape((len(K),) + (3,) * d)
        centre = (1,) * d
        lower = list(np.ndindex(*(2,) * d))
        cells = np.stack([K - 1 + np.array(lc) for lc in lower], axis=1)   # (nK, ncell, d)
        cell_shape = np.array(self.F.grid.cell_shape)
        valid = np.all((cells >= 0) & (cells < cell_shape), axis=-1)
        cc = np.clip(cells, 0, cell_shape - 1)
        centres = self.F.grid.cell_centers()[tuple(cc[..., a] for a in range(d))]
        bounds = [self.F.phi.at(centres[:, m]) for m in range(len(lower))]
        h = self.F.grid.h
        vol = self.F.grid.cell_volume

        def local(vals, with_chi=True):
            P = patch.copy()
            P[(slice(None),) + centre] = vals
            e = np.zeros(cells.shape[:2])
            de = np.zeros(cells.shape[:2])
            for m, lc in enumerate(lower):
                base = P[(slice(None),) + lc]
                g = []
                dg = []
                for a in range(d):
                    nb = list(lc)
                    nb[a] += 1
                    g.append((P[(slice(None),) + tuple(nb)] - base) / h[a])
                    # derivative of g_a with respect to the centre value
                    dg.append((float(tuple(nb) == centre) - float(tuple(lc) == centre)) / h[a])
                g = np.stack(g, axis=-1)
                norm = np.sqrt(np.sum(g * g, axis=-1))
                e[:, m] = bounds[m].value(norm)
                with np.errstate(invalid="ignore", divide="ignore"):
                    coef = np.where(norm > 0, bounds[m].deriv(norm) / norm, 0.0)
                de[:, m] = coef * (g @ np.array(dg))
                if with_chi:
                    corner = P[(slice(None),) + tuple(slice(k, k + 2) for k in lc)]
                    pos = corner.reshape(len(K), -1).max(axis=1) > self.tau
                    e[:, m] += self.F.lam * pos
            e = np.where(valid, e, 0.0) * vol
            de = np.where(valid, de, 0.0) * vol
            return e.sum(axis=1), de.sum(axis=1)

        flat = patch.reshape(len(K), -1)
        lo, hi = flat.min(axis=1), flat.max(axis=1)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            up = local(mid, with_chi=False)[1] > 0
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
            if np.all(hi - lo <= 1e-14 * np.maximum(np.abs(hi), 1e-300)):
                break
        cur = patch[(slice(None),) + centre].copy()
        cands = np.stack([cur, np.zeros_like(cur), np.maximum(0.5 * (lo + hi), 0.0)])
        Ls = np.stack([local(c)[0] for c in cands])
        pick = np.argmin(Ls, axis=0)
        gain = Ls[0] - Ls[pick, np.arange(len(K))]
        accept = gain > 1e-13 * np.maximum(np.abs(Ls[0]), 1e-300)
        if accept.any():
            idx = tuple(K[accept].T)
            u[idx] = cands[pick[accept], np.flatnonzero(accept)]
        return int(accept.sum())

    def _resolve(self, u, free):
        energy = DirichletEnergy(self.F.phi, self.F.grid)
        energy.bound = self.F.bound
        res = solve_dirichlet(energy, u, free, gtol=self.opts.gtol, max_iter=100,
                              deltas=(self.opts.delta_min,))
        return np.maximum(res.values, 0.0)

    def support_moves(self, u, E):
        """Convex re-solve on the current support and on the support grown or shrunk by one layer."""
        positive = u > self.tau
        pos = positive & self.free
        zero = ~positive & self.free
        base = u.copy()
        base[zero] = 0.0
        candidates = [pos]
        layer_in = pos & _axis_neighbours(~positive)
        layer_out = zero & _axis_neighbours(positive)
        if layer_in.any():
            candidates.append(pos & ~layer_in)
        if layer_out.any():
            candidates.append(pos | layer_out)
        best_u, best_E = u, E
        for free in candidates:
            start = base.copy()
            start[self.free & ~free] = 0.0
            cand = self._resolve(start, free)
            Ec = self.energy(cand)
            if self.better(Ec, best_E):
                best_u, best_E = cand, Ec
        return best_u, best_E

    def run(self, u, log, level):
        E = self.energy(u)
        rounds = 0
        for rounds in range(1, self.opts.max_polish_rounds + 1):
            improved = False
            for name, move in (("truncation", self.truncations), ("coordinate", self.sweep),
                               ("support", self.support_moves)):
                u_new, E_new = move(u, E)
                if self.better(E_new, E):
                    u, E, improved = u_new, E_new, True
                    log.append({"level": level, "stage": f"polish:{name}", "energy": E})
            if not improved:
                return u, E, True
        return u, E, False


def _lbfgs_stage(F, u, free, eps, delta, opts):
    idx = np.flatnonzero(free.ravel())
    base = u.ravel().copy()

    def fun(x):
        v = base.copy()
        v[idx] = x
        E, G = F.smoothed_energy_grad(v.reshape(u.shape), eps, delta)
        return E, G.ravel()[idx]

    res = sp_minimize(fun, base[idx], jac=True, method="L-BFGS-B",
                      bounds=Bounds(np.zeros(idx.size), np.full(idx.size, np.inf)),
                      options={"maxiter": opts.max_iter, "ftol": opts.gtol, "gtol": 1e-300,
                               "maxcor": 20, "maxls": 40})
    out = base.copy()
    out[idx] = np.maximum(res.x, 0.0)
    ok = bool(res.success) or res.nit < opts.max_iter
    return out.reshape(u.shape), float(res.fun), int(res.nit), ok


def _levels(grid, mask, opts):
    levels = [grid]
    if not opts.multilevel or not np.array_equal(mask, grid.boundary_mask()):
        return levels
    g = grid
    while all(c % 2 == 0 and c // 2 >= opts.coarsest_cells for c in g.cell_shape):
        g = g.coarsen()
        levels.append(g)
    return levels[::-1]


def minimize(functional, boundary, options=None):
    """Minimize the discrete energy with Dirichlet data on ``boundary.boundary_mask``.

    Returns a :class:`SolveResult`; on hitting an iteration cap the best
    iterate is returned with ``converged=False``.
    """
    if not isinstance(functional, Functional):
        raise TypeError("functional must be a Functional")
    if not isinstance(boundary, Field) or boundary.grid != functional.grid:
        raise ValueError("boundary data must be a Field on the functional's grid")
    opts = options or SolveOptions()
    fixed = boundary.boundary_mask
    data = boundary.values
    if np.any(data[fixed] < 0):
        raise PreconditionError("boundary data must be nonnegative")
    scale = float(np.max(data[fixed], initial=0.0))
    log = []
    if scale == 0.0:
        u = np.where(fixed, data, 0.0)
        return SolveResult(boundary.copy(u), 0.0, True, 0.0, log)
    tau = TAU_REL * scale
    rng = np.random.default_rng(opts.seed)
    eps_all, delta_all = opts.schedules(scale)

    levels = _levels(functional.grid, fixed, opts)
    converged = True
    u = None
    smoothed_energy = np.nan
    for li, grid in enumerate(levels):
        F = functional if grid == functional.grid else functional.with_grid(grid)
        if grid == functional.grid:
            lvl_fixed, lvl_data = fixed, data
        else:
            step = (functional.grid.shape[0] - 1) // (grid.shape[0] - 1)
            sl = tuple(slice(None, None, step) for _ in range(grid.d))
            lvl_fixed, lvl_data = grid.boundary_mask(), data[sl]
        free = ~lvl_fixed
        if u is None:
            energy = DirichletEnergy(F.phi, grid)
            energy.bound = F.bound
            u = solve_dirichlet(energy, np.where(lvl_fixed, lvl_data, 0.0), free,
                                gtol=1e-6, max_iter=50).values
            stages = range(opts.n_stages)
        else:
            u = prolong(u, levels[li - 1], grid)
            stages = range(opts.n_stages - opts.fine_stages, opts.n_stages)
        u = np.where(lvl_fixed, lvl_data, np.maximum(u, 0.0))
        for k in stages:
            u, Es, nit, ok = _lbfgs_stage(F, u, free, eps_all[k], delta_all[k], opts)
            converged &= ok
            log.append({"level": li, "stage": f"smooth:{k}", "eps": float(eps_all[k]),
                        "delta": float(delta_all[k]), "smoothed_energy": Es, "iterations": nit,
                        "energy": float(np.sum(F.cell_energy(u, tau)))})
        if grid == functional.grid:
            smoothed_energy = float(np.sum(F.cell_energy(u, tau)))
        u, E, done = _Polisher(F, lvl_fixed, tau, opts, rng).run(u, log, li)
        converged &= done
    return SolveResult(boundary.copy(u), E, bool(converged), smoothed_energy, log)
