"""Decay of ball averages: Morrey-type bounds, Hoelder seminorms and gradient excess."""
import math

import numpy as np

from ..exceptions import PreconditionError
from ..grid import Ball, gradient
from ..solver.functional import positivity_threshold
from ..validation import check_field, check_positive, check_radii
from .report import EstimateReport, Row, fit_loglog

__all__ = ["morrey_decay", "holder_seminorm", "gradient_excess_decay", "FIT_TOL", "HOLDER_SEED"]

FIT_TOL = 0.05
HOLDER_SEED = 0x5EED
PAIR_BUDGET = 10_000_000
_ZERO = 1e-12


def _cell_means(u, center, radii, fn):
    norm_or_grad = gradient(u)
    out = []
    for r in radii:
        ball = Ball(center, r)
        mask = ball.cell_mask(u.grid)
        if not mask.any():
            raise ValueError(f"no cell centre inside {ball}")
        out.append(fn(norm_or_grad[mask]))
    return np.array(out)


def _fit(values, radii, scale):
    """Slope of the log-log fit; identically vanishing data count as flat."""
    if np.all(values <= _ZERO * scale):
        return 0.0, 0.0, values.copy()
    if np.any(values <= 0):
        raise ValueError("averages vanish on some radii but not on others")
    return fit_loglog(radii, values, return_prediction=True)


def _rows(prefix, radii, values, pred):
    return [Row(f"{prefix}:{k}", r, v, p, v / p if p > 0 else 0.0, True)
            for k, (r, v, p) in enumerate(zip(radii, values, pred))]


def morrey_decay(u, center, radii, sigma=0.1, fit_tol=FIT_TOL):
    """Fit mean_{B_rho} |grad u| ~ rho^slope; pass iff slope >= -sigma - fit_tol."""
    check_field(u)
    radii = check_radii(radii, minimum=3)
    sigma = check_positive(sigma, "sigma", strict=False)
    means = _cell_means(u, center, radii, lambda g: float(np.mean(np.sqrt(np.sum(g * g, -1)))))
    slope, resid, pred = _fit(means, radii, 1.0)
    passed = bool(slope >= -sigma - fit_tol)
    rows = _rows("morrey", radii, means, pred)
    return EstimateReport("morrey", rows, slope, resid, passed,
                          {"h": u.grid.hmax, "sigma": sigma, "fit_tol": fit_tol,
                           "center": list(center)})


def _pairs_max(x, v, alpha, i, j):
    dist = np.sqrt(np.sum((x[i] - x[j]) ** 2, axis=-1))
    keep = dist > 0
    return float(np.max(np.abs(v[i] - v[j])[keep] / dist[keep] ** alpha, initial=0.0))


def holder_seminorm(u, alpha, region=None, budget=PAIR_BUDGET, seed=HOLDER_SEED):
    """max |u(x) - u(y)| / |x - y|^alpha over node pairs in ``region``.

    All pairs are used when their number fits ``budget``. Otherwise every node
    is paired with the same number of uniformly drawn partners (stratified by
    first node), and all nearest-neighbour pairs along the axes are added.
    """
    check_field(u)
    alpha = check_positive(alpha, "alpha")
    if alpha > 1:
        raise ValueError("alpha must lie in (0, 1]")
    mask = np.ones(u.grid.shape, bool) if region is None else region.node_mask(u.grid, closed=True)
    x = u.grid.nodes()[mask]
    v = u.values[mask]
    n = len(v)
    if n < 2:
        return 0.0
    best = 0.0
    if n * (n - 1) // 2 <= budget:
        chunk = max(1, budget // max(n, 1) // 8)
        for start in range(0, n, chunk):
            i = np.arange(start, min(start + chunk, n))
            ii, jj = np.meshgrid(i, np.arange(n), indexing="ij")
            sel = jj > ii
            best = max(best, _pairs_max(x, v, alpha, ii[sel], jj[sel]))
        return best
    rng = np.random.default_rng(seed)
    per_node = max(1, budget // n)
    chunk = max(1, budget // per_node // 8)
    for start in range(0, n, chunk):
        i = np.repeat(np.arange(start, min(start + chunk, n)), per_node)
        j = rng.integers(0, n, size=i.size)
        best = max(best, _pairs_max(x, v, alpha, i, j))
    idx = np.full(u.grid.shape, -1)
    idx[mask] = np.arange(n)
    for axis in range(u.grid.d):
        a = np.moveaxis(idx, axis, 0)
        i, j = a[:-1].ravel(), a[1:].ravel()
        ok = (i >= 0) & (j >= 0)
        if ok.any():
            best = max(best, _pairs_max(x, v, alpha, i[ok], j[ok]))
    return best


def gradient_excess_decay(u, center, radii, alpha_min=0.0, fit_tol=FIT_TOL, tau=None):
    """Fit E(rho) = mean_{B_rho} |grad u - mean grad u| ~ rho^slope inside {u > tau}.

    ``alpha_min`` is the user-chosen lower bound for the slope.
    """
    check_field(u)
    radii = check_radii(radii, minimum=3)
    tau = positivity_threshold(u.values) if tau is None else tau
    big = Ball(center, radii[-1])
    near = big.node_mask(u.grid, closed=True) | big.ring_mask(u.grid)
    if np.any(u.values[near] <= tau):
        raise PreconditionError(f"{big} touches the zero set of u")

    def excess(g):
        return float(np.mean(np.sqrt(np.sum((g - g.mean(axis=0)) ** 2, axis=-1))))

    values = _cell_means(u, center, radii, excess)
    scale = float(np.max(np.sqrt(np.sum(gradient(u) ** 2, -1)), initial=0.0)) + 1.0
    slope, resid, pred = _fit(values, radii, scale)
    flat = bool(np.all(values <= _ZERO * scale))
    passed = flat or bool(slope >= alpha_min - fit_tol)
    rows = _rows("excess", radii, values, pred)
    return EstimateReport("gradient_excess", rows, math.inf if flat else slope, resid, passed,
                          {"h": u.grid.hmax, "alpha_min": alpha_min, "fit_tol": fit_tol,
                           "center": list(center), "vanishing": flat})
