"""Discrete Alt-Caffarelli energy on a uniform grid.

Per cell ``c`` with lower corner node ``k``::

    E_c(v) = [phi(x_c, |grad v|_c) + lambda * chi(max corner value > tau)] * h^d

The gradient uses forward differences from the lower corner, so every cell
term is a convex function of its node values (apart from the indicator).
"""
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..exceptions import PreconditionError
from ..grid import Field, Grid, cell_corner_max, gradient
from ..validation import check_positive

__all__ = ["Functional", "TAU_REL", "positivity_threshold", "gradient_adjoint",
           "cells_to_nodes", "gradient_matrix", "corner_slices", "weighted_laplacian",
           "DirichletEnergy"]

TAU_REL = 1e-10


def positivity_threshold(values):
    """Scale-free numeric zero: ``TAU_REL * sup(values)``."""
    return TAU_REL * float(np.max(values, initial=0.0))


def corner_slices(d):
    if d == 1:
        return [(slice(None, -1),), (slice(1, None),)]
    return [(slice(None, -1), slice(None, -1)), (slice(1, None), slice(None, -1)),
            (slice(None, -1), slice(1, None)), (slice(1, None), slice(1, None))]


def gradient_adjoint(w, grid):
    """Transpose of :func:`grid.gradient`: cell covectors ``w`` -> nodal array."""
    h = grid.h
    out = np.zeros(grid.shape)
    if grid.d == 1:
        w1 = w[..., 0] / h[0]
        out[:-1] -= w1
        out[1:] += w1
        return out
    w1 = w[..., 0] / h[0]
    w2 = w[..., 1] / h[1]
    out[:-1, :-1] -= w1 + w2
    out[1:, :-1] += w1
    out[:-1, 1:] += w2
    return out


def cells_to_nodes(cell_values, grid):
    """Sum of the values of all cells having the node as a corner."""
    out = np.zeros(grid.shape)
    for sl in corner_slices(grid.d):
        out[sl] += cell_values
    return out


@lru_cache(maxsize=16)
def gradient_matrix(grid):
    """Sparse forward-difference operator, rows ordered (component, cell)."""
    idx = np.arange(int(np.prod(grid.shape))).reshape(grid.shape)
    h = grid.h
    blocks = []
    if grid.d == 1:
        lo, hi = idx[:-1], idx[1:]
        pairs = [(lo, hi, h[0])]
    else:
        base = idx[:-1, :-1]
        pairs = [(base, idx[1:, :-1], h[0]), (base, idx[:-1, 1:], h[1])]
    ncell = int(np.prod(grid.cell_shape))
    nnode = idx.size
    for lo, hi, hh in pairs:
        rows = np.arange(ncell)
        data = np.concatenate([-np.ones(ncell), np.ones(ncell)]) / hh
        blocks.append(sp.csr_matrix((data, (np.concatenate([rows, rows]),
                                            np.concatenate([lo.ravel(), hi.ravel()]))),
                                    shape=(ncell, nnode)))
    return sp.vstack(blocks).tocsr()


def weighted_laplacian(grid, coef, floor_rel=1e-10):
    """D^T diag(coef) D with coefficients floored relative to their max."""
    D = gradient_matrix(grid)
    c = np.asarray(coef, dtype=float).ravel()
    cmax = float(np.max(c, initial=0.0))
    c = np.maximum(c, max(cmax * floor_rel, 1e-300))
    w = np.tile(c, grid.d) * grid.cell_volume
    return (D.T @ sp.diags(w) @ D).tocsr()


class DirichletEnergy:
    """sum phi(x_c, |grad v|_c) h^d with phi frozen at cell centers."""

    lam = 0.0

    def __init__(self, phi, grid):
        if not isinstance(grid, Grid):
            raise TypeError("grid must be a Grid")
        self.phi = phi
        self.grid = grid
        self.bound = phi.at(grid.cell_centers())

    def with_grid(self, grid):
        return DirichletEnergy(self.phi, grid)

    def _values(self, v):
        return v.values if isinstance(v, Field) else np.asarray(v, dtype=float)

    # -- exact energy ---------------------------------------------------------
    def positive_cells(self, v, tau=None):
        v = self._values(v)
        tau = positivity_threshold(v) if tau is None else tau
        return cell_corner_max(v, self.grid.d) > tau

    def cell_energy(self, v, tau=None):
        v = self._values(v)
        norm = np.sqrt(np.sum(gradient(v, self.grid) ** 2, axis=-1))
        return (self.bound.value(norm) + self.lam * self.positive_cells(v, tau)) * self.grid.cell_volume

    def energy(self, v, tau=None):
        return float(np.sum(self.cell_energy(self._values(v), tau)))

    def gradient_energy(self, v):
        """Dirichlet part only: sum of phi(x_c, |grad v|) h^d."""
        v = self._values(v)
        norm = np.sqrt(np.sum(gradient(v, self.grid) ** 2, axis=-1))
        return float(np.sum(self.bound.value(norm)) * self.grid.cell_volume)

    # -- convex part with gradient regularization ------------------------------
    def convex_energy_grad(self, v, delta=0.0):
        """sum [phi(x_c, sqrt(|g|^2 + delta^2)) - phi(x_c, delta)] h^d and its nodal gradient."""
        g = gradient(v, self.grid)
        s = np.sqrt(np.sum(g * g, axis=-1) + delta * delta)
        vol = self.grid.cell_volume
        e = self.bound.value(s)
        if delta > 0:
            e = e - self.bound.value(np.full_like(s, delta))
        dphi = self.bound.deriv(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            coef = np.where(s > 0, dphi / s, 0.0)
        grad = gradient_adjoint(coef[..., None] * g, self.grid) * vol
        return float(np.sum(e) * vol), grad, coef

    def weighted_laplacian(self, coef, floor_rel=1e-10):
        return weighted_laplacian(self.grid, coef, floor_rel)


class Functional(DirichletEnergy):
    """phi(x, |grad v|) + lambda chi_{v > 0} on ``grid``."""

    def __init__(self, phi, lam, grid):
        super().__init__(phi, grid)
        self.lam = check_positive(lam, "lambda")

    def with_grid(self, grid):
        return Functional(self.phi, self.lam, grid)

    def energy(self, v, tau=None):
        v = self._values(v)
        if np.any(v < 0):
            raise PreconditionError("energy is defined for nonnegative fields")
        return super().energy(v, tau)

    # -- smoothed indicator ---------------------------------------------------
    def smoothed_energy_grad(self, v, eps, delta):
        """Convex part plus lambda * (1 - prod_k (1 - min(v_k/eps, 1))) per cell."""
        E, grad, _ = self.convex_energy_grad(v, delta)
        vol = self.grid.cell_volume
        chi = np.minimum(np.maximum(v, 0.0) / eps, 1.0)
        dchi = np.where((v >= 0) & (v < eps), 1.0 / eps, 0.0)
        one_minus = 1.0 - chi
        slices = corner_slices(self.grid.d)
        factors = [one_minus[sl] for sl in slices]
        prod = np.prod(factors, axis=0)
        E += self.lam * float(np.sum(1.0 - prod)) * vol
        for i, sl in enumerate(slices):
            others = np.prod([f for j, f in enumerate(factors) if j != i], axis=0)
            grad[sl] += self.lam * vol * dchi[sl] * others
        return E, grad
