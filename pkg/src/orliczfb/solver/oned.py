"""Exact minimizer of the one-dimensional problem on [0, 1]::

    min  int_0^1 G(|u'|) + lambda chi_{u > 0}   with u(0) = a, u(1) = b, u >= 0.

Minimizers are piecewise linear. Candidates are the linear interpolant and the
profiles that decrease from ``a`` to zero over a length ``l1``, stay zero, and
rise to ``b`` over a length ``l2``. Each ramp of height ``c`` and length ``l``
costs ``l (G(c/l) + lambda)``, minimized at slope ``c/l = s*`` where
``s* G'(s*) - G(s*) = lambda``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..exceptions import DomainError

__all__ = ["OneDSolution", "free_boundary_slope", "solve_1d_exact"]


def _scalar(f, t):
    return float(np.asarray(f(np.zeros(1), np.array([float(t)]))).ravel()[0])


def free_boundary_slope(G, lam):
    """Root of s G'(s) - G(s) = lambda, plus the residual of the root."""
    def h(s):
        return s * _scalar(G.deriv, s) - _scalar(G, s) - lam

    hi = 1.0
    while h(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("no free-boundary slope: s G'(s) - G(s) stays below lambda")
    lo = hi / 2.0
    while lo > 1e-300 and h(lo) > 0:
        lo /= 2.0
    s = brentq(h, lo if h(lo) <= 0 else 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
               maxiter=500)
    return s, abs(h(s))


@dataclass
class OneDSolution:
    kind: str               # "zero", "linear", "ramps", "touching"
    a: float
    b: float
    l1: float               # length of the left ramp
    l2: float               # length of the right ramp
    energy: float
    lambda_star: float
    slope_residual: float

    @property
    def breakpoints(self):
        if self.kind in ("zero", "linear"):
            return ()
        return (self.l1, 1.0 - self.l2)

    @property
    def slopes(self):
        if self.kind == "zero":
            return (0.0,)
        if self.kind == "linear":
            return (self.b - self.a,)
        left = -self.a / self.l1 if self.l1 > 0 else 0.0
        right = self.b / self.l2 if self.l2 > 0 else 0.0
        return (left, 0.0, right)

    @property
    def positivity_measure(self):
        if self.kind == "zero":
            return 0.0
        if self.kind == "linear":
            return 1.0 if max(self.a, self.b) > 0 else 0.0
        return self.l1 + self.l2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.a + (self.b - self.a) * x
        left = self.a * np.clip(1 - x / self.l1, 0, None) if self.l1 > 0 else np.zeros_like(x)
        right = self.b * np.clip(1 - (1 - x) / self.l2, 0, None) if self.l2 > 0 else np.zeros_like(x)
        return np.maximum(left, right)


def _ramp(G, lam, c, length):
    if c == 0:
        return 0.0
    return length * (_scalar(G, c / length) + lam)


def solve_1d_exact(G, lam, a, b):
    """Global minimizer over the candidate class; ties go to the smaller positivity set."""
    if a < 0 or b < 0:
        raise DomainError("boundary values must be nonnegative")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not G.autonomous:
        raise ValueError("the exact 1D oracle needs an autonomous integrand")
    s, resid = free_boundary_slope(G, lam)
    a, b = float(a), float(b)
    if a == 0 and b == 0:
        return OneDSolution("zero", a, b, 0.0, 0.0, 0.0, s, resid)

    candidates = [OneDSolution("linear", a, b, 0.0, 0.0,
                               _scalar(G, abs(b - a)) + lam, s, resid)]
    l1, l2 = a / s, b / s
    if l1 + l2 <= 1.0:
        energy = _ramp(G, lam, a, l1) + _ramp(G, lam, b, l2)
        candidates.append(OneDSolution("ramps", a, b, l1, l2, energy, s, resid))
    elif a > 0 and b > 0:
        # ramps meet at a single zero
        f = lambda x: _ramp(G, lam, a, x) + _ramp(G, lam, b, 1.0 - x)
        opt = minimize_scalar(f, bounds=(1e-12, 1 - 1e-12), method="bounded",
                              options={"xatol": 1e-13})
        candidates.append(OneDSolution("touching", a, b, float(opt.x), 1 - float(opt.x),
                                       float(opt.fun), s, resid))
    return min(candidates, key=lambda c: (round(c.energy, 12), c.positivity_measure))
