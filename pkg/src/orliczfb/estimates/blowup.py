"""Blow-up sequences v_j(x) = u(x0 + r_j x) / (sigma_j r_j) and their diagnostics."""
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..exceptions import DomainError
from ..grid import Ball, Field, Grid, grad_norm
from ..phi import recession_limit
from ..solver.functional import DirichletEnergy, positivity_threshold
from ..validation import check_field, check_positive
from .report import EstimateReport, Row

__all__ = ["BlowupRun", "blowup_run", "euler_lagrange_residual", "RECESSION_SIGMAS"]

RECESSION_SIGMAS = 2.0 ** np.arange(0, 41)
RECESSION_T = np.logspace(-3, 3, 121)
RESIDUAL_ATOL = 1e-10


@dataclass
class BlowupRun:
    x0: tuple
    j: np.ndarray
    r: np.ndarray
    sigma: np.ndarray
    fields: list
    phi_inf: object
    recession: object
    increments: np.ndarray
    residuals: np.ndarray
    weights: np.ndarray
    scaled_normalizer: np.ndarray       # phi(x0, sigma_j) * r_j
    flags: dict = dc_field(default_factory=dict)

    @property
    def limit(self):
        return self.fields[-1]


def _bumps(grid, v, radius, tau):
    """Quadratic bumps of the given radius whose closed support lies in {v > tau}."""
    x = grid.nodes()
    lo, hi = np.array(grid.lo), np.array(grid.hi)
    pos = v > tau
    out = []
    for idx in zip(*np.nonzero(pos)):
        c = x[idx]
        if np.any(c - radius < lo) or np.any(c + radius > hi):
            continue
        ball = Ball(tuple(c), radius)
        support = ball.node_mask(grid, closed=True)
        if not np.all(pos[support | ball.ring_mask(grid)]):
            continue
        dist2 = np.sum((x - c) ** 2, axis=-1)
        out.append(np.clip(1.0 - dist2 / radius ** 2, 0.0, None))
    return out


def euler_lagrange_residual(phi_inf, v, bump_radius):
    """max over bumps eta in {v > 0} of |<DE(v), eta>| / int phi'(|grad v|) |grad eta|."""
    grid = v.grid
    energy = DirichletEnergy(phi_inf, grid)
    _, G, coef = energy.convex_energy_grad(v.values, 0.0)
    norm = grad_norm(v)
    dphi = energy.bound.deriv(norm)
    worst = 0.0
    bumps = _bumps(grid, v.values, bump_radius, positivity_threshold(v.values))
    if not bumps:
        return math.nan
    for eta in bumps:
        num = abs(float(np.sum(G * eta)))
        den = float(np.sum(dphi * grad_norm(eta, grid))) * grid.cell_volume
        worst = max(worst, num / den if den > 0 else 0.0)
    return worst


def blowup_run(phi, u, x0, j_max, lam=1.0, j_min=None, sigmas=None, R=1.0, n_ref=33,
               bump_radius=0.25, recession_sigmas=RECESSION_SIGMAS):
    """Rescale ``u`` around ``x0`` at radii r_j = 2^-j (r_j >= 4h).

    ``sigmas`` defaults to sigma_j = max(1, S_{j+1} / r_j) with S the sup of u
    on the closed ball of radius r_{j+1}. Fields are resampled by multilinear
    interpolation onto ``n_ref`` nodes per axis of [-R, R]^d.
    """
    check_field(u)
    lam = check_positive(lam, "lambda")
    grid = u.grid
    d = grid.d
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    lo, hi = np.array(grid.lo), np.array(grid.hi)
    if np.any(x0 <= lo) or np.any(x0 >= hi):
        raise DomainError("blow-up centre must be an interior point")
    h = grid.hmax
    fits = [j for j in range(0, j_max + 1)
            if np.all(x0 - R * 2.0 ** -j >= lo - 1e-12) and np.all(x0 + R * 2.0 ** -j <= hi + 1e-12)]
    start = fits[0] if j_min is None and fits else j_min
    if start is None:
        raise DomainError("no blow-up radius fits inside the grid box")
    js = [j for j in range(start, j_max + 1) if 2.0 ** -j >= 4 * h - 1e-15 and j in fits]
    if not js or js[-1] < j_max:
        warnings.warn(f"blow-up radii below 4h dropped; last j = {js[-1] if js else None}",
                      RuntimeWarning, stacklevel=2)
    if len(js) < 2:
        raise DomainError("fewer than two admissible blow-up radii")
    js = np.array(js)
    r = 2.0 ** -js.astype(float)
    if sigmas is None:
        sig = []
        for rj in r:
            mask = Ball(tuple(x0), rj / 2).node_mask(grid, closed=True)
            sig.append(max(1.0, float(np.max(u.values[mask])) / rj))
        sigma = np.array(sig)
    else:
        sigma = np.asarray(sigmas, dtype=float)
        if sigma.shape != r.shape:
            raise ValueError(f"need {r.size} sigma values, one per admissible radius")

    ref = Grid((-R,) * d, (R,) * d, (n_ref,) * d)
    interp = RegularGridInterpolator(grid.axes(), u.values)
    pts = ref.nodes().reshape(-1, d)
    fields = []
    for rj, sj in zip(r, sigma):
        vals = interp(np.clip(x0 + rj * pts, lo, hi)).reshape(ref.shape) / (sj * rj)
        fields.append(Field(ref, vals))
    in_ball = Ball((0.0,) * d, R).node_mask(ref, closed=True)
    increments = np.array([float(np.max(np.abs(b.values - a.values)[in_ball]))
                           for a, b in zip(fields[:-1], fields[1:])])

    phi_inf, rec = recession_limit(phi, recession_sigmas, RECESSION_T, x0)
    residuals = np.array([euler_lagrange_residual(phi_inf, v, bump_radius * R) for v in fields])
    norm = np.array([float(np.ravel(phi(x0, s))[0]) for s in sigma])
    weights = lam / norm
    scaled = norm * r

    centre_idx = tuple([n_ref // 2] * d)
    flags = {
        "sigma_increasing": bool(np.all(np.diff(sigma) >= 0)),
        "scaled_normalizer_decreasing": bool(np.all(np.diff(scaled) < 0)),
        "weights_nonincreasing": bool(np.all(np.diff(weights) <= 0)),
        "residual_monotone": bool(np.all(np.diff(residuals[np.isfinite(residuals)])
                                         <= RESIDUAL_ATOL)),
        "v_at_origin": [float(v.values[centre_idx]) for v in fields],
    }
    run = BlowupRun(tuple(x0), js, r, sigma, fields, phi_inf, rec, increments, residuals,
                    weights, scaled, flags)
    return run, _report(run, u, phi, lam)


def _report(run, u, phi, lam):
    rows = []
    for k, j in enumerate(run.j):
        prev_res = run.residuals[k - 1] if k else run.residuals[k]
        prev_w = run.weights[k - 1] if k else run.weights[k]
        res = run.residuals[k]
        rows.append(Row(f"blowup:residual:j={j}", run.r[k], res, prev_res,
                        res / prev_res if prev_res > 0 else 0.0, bool(np.isfinite(res))))
        rows.append(Row(f"blowup:weight:j={j}", run.r[k], run.weights[k], prev_w,
                        run.weights[k] / prev_w, bool(run.weights[k] <= prev_w)))
        if k + 1 < len(run.j):
            inc = run.increments[k]
            rows.append(Row(f"blowup:increment:j={j}", run.r[k], inc, inc, 1.0, bool(np.isfinite(inc))))
    # residual monotonicity is a flag only: at fixed h, deep blow-ups are under-resolved
    passed = run.flags["weights_nonincreasing"] and bool(np.all(np.isfinite(run.residuals)))
    return EstimateReport("blowup", rows, None, None, passed,
                          {"h": u.grid.hmax, "phi": phi.family, "lambda": lam,
                           "x0": list(run.x0), "sigma": run.sigma, "flags": run.flags,
                           "recession_converged": run.recession.converged})
