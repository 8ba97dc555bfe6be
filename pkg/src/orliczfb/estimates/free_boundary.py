"""Free-boundary detection, linear growth away from it, and gradient bounds."""
import math
import warnings

import numpy as np

from ..exceptions import DegenerateBallError, DomainError
from ..grid import Ball, grad_norm
from ..solver.functional import positivity_threshold
from ..validation import check_field, check_positive
from .report import EstimateReport, Row

__all__ = ["free_boundary_mask", "free_boundary_points", "nearest_free_boundary_point",
           "growth_dichotomy", "lipschitz_certificate", "LIP_TOL"]

LIP_TOL = 0.10


def free_boundary_mask(u, tau=None):
    """Nodes with u <= tau having an axis neighbour with u > tau."""
    check_field(u)
    tau = positivity_threshold(u.values) if tau is None else tau
    pos = u.values > tau
    near = np.zeros_like(pos)
    for axis in range(pos.ndim):
        lo = [slice(None)] * pos.ndim
        hi = [slice(None)] * pos.ndim
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        near[tuple(lo)] |= pos[tuple(hi)]
        near[tuple(hi)] |= pos[tuple(lo)]
    return near & ~pos


def free_boundary_points(u, tau=None):
    """Coordinates, shape ``(m, d)``, of the nodes in :func:`free_boundary_mask`."""
    return u.grid.nodes()[free_boundary_mask(u, tau)]


def nearest_free_boundary_point(u, target, tau=None):
    pts = free_boundary_points(u, tau)
    if len(pts) == 0:
        raise DomainError("u has no free-boundary nodes")
    return pts[np.argmin(np.sum((pts - np.asarray(target, float)) ** 2, axis=1))]


def growth_dichotomy(u, x0, k_max=5, M=1.0, k_min=0, halving_tol=None):
    """S_k = sup of u over the closed ball B_{2^-k}(x0) intersected with the grid box.

    Reports (as the exponent slot) the smallest C with S_k <= C M 2^-k for
    k_min <= k <= k_max. Row names carry, for k < k_max, whether
    S_{k+1} <= S_k / 2 (halving) or only the linear bound is active. Radii
    below two grid steps are dropped with a warning.
    """
    check_field(u)
    M = check_positive(M, "M")
    h = u.grid.hmax
    tol = h if halving_tol is None else halving_tol
    x0 = tuple(float(c) for c in np.atleast_1d(x0))
    ks = [k for k in range(k_min, k_max + 1) if 2.0 ** -k >= 2 * h - 1e-15]
    if not ks:
        raise DomainError("no admissible radius above two grid steps")
    if ks[-1] < k_max:
        warnings.warn(f"growth_dichotomy: radii below 2h dropped, k_max truncated to {ks[-1]}",
                      RuntimeWarning, stacklevel=2)
    S = np.array([float(np.max(u.values[Ball(x0, 2.0 ** -k).node_mask(u.grid, closed=True)]))
                  for k in ks])
    radii = 2.0 ** -np.array(ks, dtype=float)
    C = float(np.max(S / (M * radii)))
    rows, ratios = [], []
    for i, k in enumerate(ks):
        if i + 1 < len(ks):
            # which branch of S_{k+1} <= max(C M r_{k+1}, S_k / 2) is active
            halving = bool(S[i + 1] <= S[i] / 2 + tol * max(S[i], M * radii[i]))
            ratios.append(float(S[i + 1] / S[i]) if S[i] > 0 else 0.0)
        else:
            halving = None
        label = f"growth:k={k}" + ("" if halving is None else (":halving" if halving else ":linear"))
        rows.append(Row(label, radii[i], S[i], M * radii[i], S[i] / (M * radii[i]),
                        bool(np.isfinite(S[i]))))
    return EstimateReport("growth_dichotomy", rows, C, None, bool(np.isfinite(C)),
                          {"h": h, "x0": list(x0), "M": M, "k": ks, "S": S.tolist(),
                           "ratios": ratios})


def _max_gradient(u, region):
    norm = grad_norm(u)
    if region is None:
        return float(np.max(norm))
    mask = region.cell_mask(u.grid)
    if not mask.any():
        raise DegenerateBallError(f"no cell centre inside {region}")
    return float(np.max(norm[mask]))


def lipschitz_certificate(u, region=None, refined=None, lip_tol=LIP_TOL):
    """Max cell |grad u| over ``region``; with ``refined`` (the same problem on a
    finer grid) pass iff the relative growth is at most ``lip_tol``."""
    check_field(u)
    g0 = _max_gradient(u, region)
    rows = [Row("lipschitz:h", u.grid.hmax, g0, g0, 1.0, math.isfinite(g0))]
    passed = rows[0].passed
    meta = {"h": u.grid.hmax, "lip_tol": lip_tol,
            "region": None if region is None else {"center": list(region.center),
                                                   "radius": region.radius}}
    if refined is not None:
        check_field(refined)
        g1 = _max_gradient(refined, region)
        growth = (g1 - g0) / g0 if g0 > 0 else (0.0 if g1 == 0 else math.inf)
        ok = bool(growth <= lip_tol)
        rows.append(Row("lipschitz:h/2", refined.grid.hmax, g1, g0, growth, ok))
        passed = passed and ok
        meta["growth"] = growth
    return EstimateReport("lipschitz", rows, None, None, passed, meta)
