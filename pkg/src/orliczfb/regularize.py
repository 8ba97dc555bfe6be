"""Autonomous regularized surrogate of phi on a ball.

Construction: take the pointwise minimum over the closed doubled ball (its grid
nodes plus points sampled on its sphere) of the derivative ``phi_t(x, t)``, mollify its logarithm in ``log t`` with a smooth
bump of half-width 0.25 decades, and integrate. Minimum and geometric-mean
averaging both preserve the monotonicity of ``phi_t / t^(p-1)`` and
``phi_t / t^(q-1)``, so the elasticity bounds survive by construction; they are
still verified on the table afterwards.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import PreconditionError, RegularizationError
from .grid import Ball
from .phi import PhiFunction

__all__ = ["RegularizedPhi", "regularize", "RTOL_REG", "ELASTICITY_TOL"]

RTOL_REG = 1e-6
ELASTICITY_TOL = 1e-3
HALF_WIDTH_DECADES = 0.25
POINTS_PER_DECADE = 24
T_RANGE = (1e-4, 1e4)
_QUAD_NODES = 129
_CHUNK = 128


def _kernel():
    w = HALF_WIDTH_DECADES * np.log(10.0)
    s = np.linspace(-w, w, _QUAD_NODES + 2)[1:-1]
    z = s / w
    k = np.exp(-1.0 / (1.0 - z * z))
    dk = k * (-2.0 * z / w) / (1.0 - z * z) ** 2
    return s, k / k.sum(), dk


def _representatives(phi, points):
    """Points with distinct coefficient values (all of them if not scalar-coefficient)."""
    bound = phi.at(points)
    c = bound.coeffs
    if c is None:
        return points[:1]
    if isinstance(c, np.ndarray) and c.shape == points.shape[:1]:
        _, idx = np.unique(np.round(c, 12), return_index=True)
        return points[np.sort(idx)]
    return points


def _sphere_points(ball, grid):
    """Points of the sphere of ``ball`` inside the grid box, spaced about h/4."""
    c = np.asarray(ball.center)
    if grid.d == 1:
        pts = np.array([[c[0] - ball.radius], [c[0] + ball.radius]])
    else:
        m = max(64, int(np.ceil(8 * np.pi * ball.radius / grid.hmax)))
        ang = 2 * np.pi * np.arange(m) / m
        pts = c + ball.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    lo, hi = np.array(grid.lo), np.array(grid.hi)
    return pts[np.all((pts >= lo) & (pts <= hi), axis=1)]


def _min_over(phi, points, t, deriv=True):
    out = np.full(t.shape, np.inf)
    for start in range(0, len(points), _CHUNK):
        b = phi.at(points[start:start + _CHUNK][:, None, :])
        v = b.deriv(t.reshape(1, -1)) if deriv else b.value(t.reshape(1, -1))
        out = np.minimum(out, v.min(axis=0).reshape(t.shape))
    return out


@dataclass
class _Table:
    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    elasticity: np.ndarray


class RegularizedPhi(PhiFunction):
    """Autonomous convex integrand given by a table of phi, phi', phi''.

    Between table points phi' is a power law (linear in log-log scale) and
    phi is its exact antiderivative, so value and derivative are consistent to
    rounding. Outside the table phi' continues with the end elasticities.
    """

    family = "Regularized"

    def __init__(self, t, dphi, elasticity, p, q, ball=None, c_cmp=np.nan):
        super().__init__(None, None, None)
        t = np.asarray(t, dtype=float)
        d = np.asarray(dphi, dtype=float)
        elas = np.asarray(elasticity, dtype=float)
        self.p, self.q = float(p), float(q)
        self.ball = ball
        self.c_cmp = float(c_cmp)
        self._lt = np.log(t)
        self._ld = np.log(d)
        self._k = np.diff(self._ld) / np.diff(self._lt)
        self._k_lo, self._k_hi = float(elas[0]), float(elas[-1])
        td = t * d
        cum = np.empty_like(t)
        cum[0] = td[0] / (self._k_lo + 1)
        cum[1:] = cum[0] + np.cumsum(np.diff(td) / (self._k + 1))
        self._cum = cum
        self.table = _Table(t, cum, d, elas * d / t, elas)

    @property
    def autonomous(self):
        return True

    def _coeffs(self, x):
        return None

    def _pieces(self, t):
        tt = np.where(t > 0, t, 1.0)
        lt = np.log(tt)
        i = np.clip(np.searchsorted(self._lt, lt, side="right") - 1, 0, len(self._lt) - 1)
        k = np.where(i < len(self._k), self._k[np.minimum(i, len(self._k) - 1)], self._k_hi)
        k = np.where(lt < self._lt[0], self._k_lo, k)
        i = np.where(lt < self._lt[0], 0, i)
        d = np.exp(self._ld[i] + k * (lt - self._lt[i]))
        return tt, i, k, d

    def _deriv(self, c, t):
        _, _, _, d = self._pieces(t)
        return np.where(t > 0, d, 0.0)

    def _value(self, c, t):
        tt, i, k, d = self._pieces(t)
        t0, d0 = self.table.t[i], self.table.dphi[i]
        below = tt * d / (self._k_lo + 1)
        inside = self._cum[i] + (tt * d - t0 * d0) / (k + 1)
        out = np.where(np.log(tt) < self._lt[0], below, inside)
        return np.where(t > 0, out, 0.0)

    def second(self, t):
        t = np.asarray(t, dtype=float)
        tt, _, k, d = self._pieces(t)
        return np.where(t > 0, k * d / tt, 0.0)

    def _pq(self):
        return self.p, self.q

    def params(self):
        return {"p": self.p, "q": self.q, "c_cmp": self.c_cmp,
                "ball": None if self.ball is None else
                {"center": list(self.ball.center), "radius": self.ball.radius}}


def regularize(phi, ball=None, grid=None, t_range=T_RANGE, points_per_decade=POINTS_PER_DECADE,
               check_preconditions=True):
    """Regularized autonomous surrogate of ``phi`` on ``ball``.

    Raises :class:`RegularizationError` when the elasticity, monotonicity or
    convexity invariants fail on the table.
    """
    env = phi.envelope
    p, q = env.p, env.q
    decades = np.log10(t_range[1]) - np.log10(t_range[0])
    t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]),
                    int(round(decades * points_per_decade)) + 1)

    if phi.autonomous:
        d = 1 if phi.domain is None else len(phi.domain[0])
        pts_outer = pts_ball = np.zeros((1, d))
    else:
        if ball is None or grid is None:
            raise ValueError("a ball and a grid are needed for a non-autonomous phi")
        outer = Ball(ball.center, 2 * ball.radius)
        nodes = grid.nodes()
        mask_outer = outer.node_mask(grid, closed=True)
        mask_ball = ball.node_mask(grid)
        if not mask_ball.any():
            raise PreconditionError(f"no grid node inside {ball}")
        pts_outer = _representatives(phi, np.concatenate([nodes[mask_outer],
                                                          _sphere_points(outer, grid)]))
        pts_ball = _representatives(phi, nodes[mask_ball])

    if check_preconditions:
        _check_derivative_conditions(phi, pts_outer, p, q)

    s, kern, dkern = _kernel()
    targets = t[:, None] * np.exp(s)[None, :]
    log_psi = np.log(_min_over(phi, pts_outer, targets))
    dphi = np.exp(log_psi @ kern)
    elasticity = -(log_psi @ dkern) / -(dkern @ s)

    reg = RegularizedPhi(t, dphi, elasticity, p, q, ball)
    c_cmp = float(np.max(reg.table.phi / (_min_over(phi, pts_ball, t, deriv=False) + 1.0)))
    reg.c_cmp = c_cmp
    _verify(reg, p, q)
    return reg


def _check_derivative_conditions(phi, points, p, q):
    t = np.logspace(-4, 4, 64)
    for start in range(0, len(points), _CHUNK):
        d = phi.at(points[start:start + _CHUNK][:, None, :]).deriv(t[None, :])
        r_inc = d / t ** (p - 1)
        r_dec = d / t ** (q - 1)
        scale = np.abs(r_inc[:, :-1]) + np.finfo(float).tiny
        if np.any((r_inc[:, :-1] - r_inc[:, 1:]) / scale > 1e-9):
            raise PreconditionError(f"phi_t fails (inc)_{p - 1:g} on the ball")
        scale = np.abs(r_dec[:, :-1]) + np.finfo(float).tiny
        if np.any((r_dec[:, 1:] - r_dec[:, :-1]) / scale > 1e-9):
            raise PreconditionError(f"phi_t fails (dec)_{q - 1:g} on the ball")


def _verify(reg, p, q):
    tab = reg.table
    diag = {}
    r_inc = tab.dphi / tab.t ** (p - 1)
    r_dec = tab.dphi / tab.t ** (q - 1)
    diag["inc_violation"] = float(np.max((r_inc[:-1] - r_inc[1:]) / r_inc[:-1]))
    diag["dec_violation"] = float(np.max((r_dec[1:] - r_dec[:-1]) / r_dec[:-1]))
    slopes = np.concatenate([tab.elasticity, reg._k])
    diag["elasticity_min"] = float(np.min(slopes))
    diag["elasticity_max"] = float(np.max(slopes))
    diag["convexity_violation"] = float(np.max(-np.diff(tab.dphi) / tab.dphi[1:]))
    diag["c_cmp"] = reg.c_cmp
    failures = []
    if diag["inc_violation"] > RTOL_REG:
        failures.append(f"phi' fails (inc)_{p - 1:g}")
    if diag["dec_violation"] > RTOL_REG:
        failures.append(f"phi' fails (dec)_{q - 1:g}")
    if diag["elasticity_min"] < p - 1 - ELASTICITY_TOL or diag["elasticity_max"] > q - 1 + ELASTICITY_TOL:
        failures.append("elasticity t phi''/phi' leaves [p-1, q-1]")
    if diag["convexity_violation"] > RTOL_REG:
        failures.append("table is not convex")
    if not np.isfinite(reg.c_cmp):
        failures.append("comparability constant is not finite")
    if failures:
        raise RegularizationError("; ".join(failures), diag)
    reg.diagnostics = diag
