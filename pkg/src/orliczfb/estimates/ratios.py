"""Ratio estimates on a ball ``B_r`` and its double ``B_2r``.

Every operation takes the inner ball ``B_r``; the doubled ball must lie in the
grid box. The reported ratio is LHS / RHS, and "bounded" is judged by
cross-resolution stability (see :func:`report.stability`), not by a constant.
"""
import math
import warnings

import numpy as np

from ..exceptions import PreconditionError
from ..grid import ball_measure, grad_norm, gradient
from ..regularize import regularize
from ..solver.replacement import harmonic_replacement
from ..validation import check_positive
from .quadrature import ball_data
from .report import EstimateReport, Row

__all__ = ["caccioppoli_ratio", "reverse_holder", "poincare_check", "small_radius",
           "comparison_estimate", "gamma_exponent", "DEFAULT_S0"]

DEFAULT_S0 = 0.1
MIN_RADIUS = 2.0 ** -60


def _label(name, ball):
    return f"{name}@(" + ",".join(f"{c:g}" for c in ball.center) + ")"


def _meta(u, phi, lam=None, **extra):
    out = {"h": u.grid.hmax, "phi": phi.family}
    if lam is not None:
        out["lambda"] = float(lam)
    out.update(extra)
    return out


def _ratio(lhs, rhs):
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def caccioppoli_ratio(phi, lam, u, ball):
    """mean_{B_r} phi(x,|grad u|) against mean_{B_2r} phi(x, |u - mean u| / 2r) + lambda."""
    lam = check_positive(lam, "lambda")
    inner, outer = ball_data(u, ball, max_radius=1.0)
    lhs = inner.mean(inner.phi_of(phi, inner.norm))
    osc = np.abs(outer.u - outer.mean(outer.u)) / (2.0 * ball.radius)
    rhs = outer.mean(outer.phi_of(phi, osc)) + lam
    ratio = _ratio(lhs, rhs)
    row = Row(_label("caccioppoli", ball), ball.radius, lhs, rhs, ratio, math.isfinite(ratio))
    return EstimateReport("caccioppoli", [row], passed=row.passed, metadata=_meta(u, phi, lam))


def _modular(data, phi):
    return float(np.sum(data.phi_of(phi, data.norm))) * data.volume / data.norm.size


def reverse_holder(phi, lam, u, ball, s0=DEFAULT_S0, t=1.0):
    """(mean_{B_r} phi^(1+s0))^(1/(1+s0)) against (mean_{B_2r} phi^t)^(1/t) + lambda + 1."""
    lam = check_positive(lam, "lambda")
    s0 = check_positive(s0, "s0")
    t = check_positive(t, "t")
    if t > 1:
        raise ValueError("t must lie in (0, 1]")
    inner, outer = ball_data(u, ball)
    modular = _modular(outer, phi)
    if modular > 1.0:
        raise PreconditionError(f"modular of grad u on the doubled ball is {modular:.6g} > 1")
    dens_in = inner.phi_of(phi, inner.norm)
    dens_out = outer.phi_of(phi, outer.norm)
    lhs = inner.mean(dens_in ** (1.0 + s0)) ** (1.0 / (1.0 + s0))
    rhs = outer.mean(dens_out ** t) ** (1.0 / t) + lam + 1.0
    ratio = _ratio(lhs, rhs)
    row = Row(_label("reverse_holder", ball), ball.radius, lhs, rhs, ratio, math.isfinite(ratio))
    return EstimateReport("reverse_holder", [row], passed=row.passed,
                          metadata=_meta(u, phi, lam, s0=s0, t=t, modular=modular))


def poincare_check(phi, u, ball, s=1.0):
    """mean phi(x, |u - mean u| / 2r) against (mean phi(x,|grad u|)^(1/s))^s + 1 on one ball."""
    s = check_positive(s, "s")
    if s < 1:
        raise ValueError("s must be >= 1")
    data = ball_data(u, ball, doubled=False)
    modular = _modular(data, phi)
    if modular > 1.0:
        raise PreconditionError(f"modular of grad u on the ball is {modular:.6g} > 1")
    osc = np.abs(data.u - data.mean(data.u)) / (2.0 * ball.radius)
    lhs = data.mean(data.phi_of(phi, osc))
    rhs = data.mean(data.phi_of(phi, data.norm) ** (1.0 / s)) ** s + 1.0
    ratio = _ratio(lhs, rhs)
    row = Row(_label("poincare", ball), ball.radius, lhs, rhs, ratio, math.isfinite(ratio))
    return EstimateReport("poincare", [row], passed=row.passed,
                          metadata=_meta(u, phi, s=s, modular=modular))


def small_radius(phi, u=None, region=None, s0=DEFAULT_S0, modular=None, L=None, omega=None):
    """Largest dyadic r0 with r0 <= 1/2, omega(2 r0) <= 1/L and

        |B_{2 r0}| <= min(1/(2L), 2^(-2(1+s0)/s0) * M^(-(2+s0)/s0)),

    where M is the stored modular of phi(x,|grad u|)^(1+s0) over ``region``
    (the whole grid when ``region`` is None) unless given directly.
    """
    s0 = check_positive(s0, "s0")
    env = phi.envelope
    L = env.L if L is None else float(L)
    omega = env.omega if omega is None else omega
    if modular is None:
        if u is None:
            raise ValueError("need a field or a stored modular")
        norm = grad_norm(u)
        centres = u.grid.cell_centers()
        mask = np.ones(u.grid.cell_shape, bool) if region is None else region.cell_mask(u.grid)
        dens = phi.at(centres[mask]).value(norm[mask]) ** (1.0 + s0)
        modular = float(np.sum(dens)) * u.grid.cell_volume
    d = phi_dimension(phi, u)
    cap = 1.0 / (2.0 * L)
    if modular > 0:
        # evaluated in logs so huge moduli underflow gracefully
        log_cap = (-2.0 * (1 + s0) / s0) * math.log(2.0) - (2 + s0) / s0 * math.log(modular)
        cap = min(cap, math.exp(max(log_cap, -700.0)))
    r = 0.5
    while r >= MIN_RADIUS:
        if float(omega(2 * r)) <= 1.0 / L and ball_measure(2 * r, d) <= cap:
            return r
        r /= 2.0
    warnings.warn("small_radius: no admissible radius above the floor; returning the floor",
                  RuntimeWarning, stacklevel=2)
    return MIN_RADIUS


def phi_dimension(phi, u=None):
    if u is not None:
        return u.grid.d
    return 1 if phi.domain is None else len(phi.domain[0])


def gamma_exponent(d, s0):
    return min(1.0, d * s0 * s0 / (4.0 * (2.0 + s0)))


def comparison_estimate(phi, lam, u, ball, reg=None, s0=DEFAULT_S0, beta=1.0, r0=None,
                        gtol=1e-8):
    """mean_{B_r} |grad u - grad v_r| against
    (omega(2r)^(p/2q^2) + r^(min(beta, gamma)/2q)) (mean_{B_2r} |grad u| + lambda + 1),
    with ``v_r`` the harmonic replacement of ``u`` on ``B_r`` for the regularized ``reg``.
    """
    lam = check_positive(lam, "lambda")
    beta = check_positive(beta, "beta")
    if r0 is not None and ball.radius > r0:
        raise PreconditionError(f"radius {ball.radius} exceeds the small radius {r0}")
    inner, outer = ball_data(u, ball)
    if reg is None:
        reg = regularize(phi, ball, u.grid)
    info = harmonic_replacement(reg, u, ball, gtol=gtol, return_info=True)
    diff = gradient(u) - gradient(info.field)
    lhs = float(np.mean(np.sqrt(np.sum(diff ** 2, axis=-1))[inner.mask]))
    env = phi.envelope
    p, q = env.p, env.q
    gam = gamma_exponent(u.grid.d, s0)
    r = ball.radius
    factor = float(env.omega(2 * r)) ** (p / (2 * q * q)) + r ** (min(beta, gam) / (2 * q))
    rhs = factor * (outer.mean(outer.norm) + lam + 1.0)
    ratio = _ratio(lhs, rhs)
    row = Row(_label("comparison", ball), r, lhs, rhs, ratio,
              math.isfinite(ratio) and info.converged)
    return EstimateReport("comparison", [row], passed=row.passed,
                          metadata=_meta(u, phi, lam, s0=s0, beta=beta, gamma=gam,
                                         replacement_residual=info.residual,
                                         replacement_converged=info.converged))
