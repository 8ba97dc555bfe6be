"""Generalized Phi-functions phi(x, t) and their structural conditions.

Built-in families::

    PowerLaw(p)                 t^p
    PerturbedOrlicz(a, p)       a(x) t^p log(e + t)
    VariableExponent(p)         t^p(x)
    DoublePhase(p, q, a)        t^p + a(x) t^q
    Tabulated(t, phi)           autonomous, log-log interpolated

Coefficient fields are mini-grammar expressions (see :mod:`orliczfb.expr`).
A function is evaluated pointwise through :meth:`PhiFunction.at`, which binds
the coefficients at a set of points once and returns a cheap evaluator; the
solvers rely on that to avoid re-evaluating ``a(x)`` per iteration.
"""
from dataclasses import dataclass, field as dc_field
from math import e as EULER

import numpy as np

from .exceptions import DegenerateBallError, DegenerateNormalizerError, DomainError
from .expr import expr_parse
from .grid import ball_measure

__all__ = [
    "HolderModulus", "GrowthEnvelope", "PhiFunction", "PowerLaw", "PerturbedOrlicz",
    "VariableExponent", "DoublePhase", "Tabulated", "BlowupPhi", "BallEnvelope",
    "ConditionVerdict", "RecessionReport", "eval_phi", "eval_deriv", "ball_envelope",
    "check_inc", "check_dec", "check_A0", "check_VA1", "check_sandwich",
    "blowup_phi", "recession_limit", "phi_from_dict", "DEFAULT_T_GRID", "RTOL_COND",
]

RTOL_COND = 1e-9
DEFAULT_T_GRID = np.logspace(-4, 4, 64)


@dataclass(frozen=True)
class HolderModulus:
    """omega(r) = min(1, C r^theta); ``C = 0`` is the zero modulus."""

    C: float = 0.0
    theta: float = 1.0

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("modulus constant must be nonnegative")
        if not 0 < self.theta <= 1:
            raise ValueError("modulus exponent must lie in (0, 1]")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.minimum(1.0, self.C * r ** self.theta)

    def to_dict(self):
        return {"C": self.C, "theta": self.theta}


@dataclass(frozen=True)
class GrowthEnvelope:
    p: float
    q: float
    L: float = 1.0
    omega: HolderModulus = dc_field(default_factory=HolderModulus)

    def __post_init__(self):
        if not 1 < self.p <= self.q:
            raise ValueError(f"need 1 < p <= q, got p={self.p}, q={self.q}")
        if self.L < 1:
            raise ValueError("L must be >= 1")


@dataclass
class ConditionVerdict:
    name: str
    passed: bool
    worst: float
    details: dict = dc_field(default_factory=dict)

    def __bool__(self):
        return self.passed


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("phi is defined for t >= 0 only")
    return t


def _safe_pow(t, p):
    """t^p with 0^p = 0 for p > 0 and no warnings."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(t, p)
    return np.where(t > 0, out, 0.0)


class PhiFunction:
    """Base class. Subclasses implement ``_coeffs`` and ``_value``/``_deriv``."""

    family = None

    def __init__(self, domain=None, omega=None, L=None):
        if domain is not None:
            lo, hi = domain
            domain = (tuple(float(v) for v in np.atleast_1d(lo)),
                      tuple(float(v) for v in np.atleast_1d(hi)))
        self.domain = domain
        self._omega = omega
        self._L = L
        self._envelope = None

    # -- evaluation ---------------------------------------------------------
    @property
    def autonomous(self):
        return False

    def _check_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if self.domain is not None:
            lo, hi = (np.array(b) for b in self.domain)
            if x.shape[-1] != lo.size:
                raise DomainError(f"points have dimension {x.shape[-1]}, domain has {lo.size}")
            span = hi - lo
            ok = np.all((x >= lo - 1e-9 * span) & (x <= hi + 1e-9 * span), axis=-1)
            if not np.all(ok):
                raise DomainError("point outside the domain box")
        return x

    def at(self, x):
        """Bind coefficients at points ``x`` of shape ``(..., d)``."""
        x = self._check_points(x)
        return BoundPhi(self, self._coeffs(x))

    def __call__(self, x, t):
        return self.at(x).value(t)

    def deriv(self, x, t):
        return self.at(x).deriv(t)

    # -- envelope -----------------------------------------------------------
    def sample_points(self, per_axis=33):
        if self.domain is None:
            return np.zeros((1, 1))
        axes = [np.linspace(a, b, per_axis) for a, b in zip(*self.domain)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))

    def _pq(self):
        raise NotImplementedError

    @property
    def envelope(self):
        if self._envelope is None:
            p, q = self._pq()
            if self._L is None:
                v = self(self.sample_points(), 1.0)
                L = float(max(np.max(v), 1.0 / np.min(v), 1.0))
            else:
                L = float(self._L)
            omega = self._omega
            if omega is None:
                omega = HolderModulus(0.0, 1.0) if self.autonomous else HolderModulus(1.0, 1.0)
            self._envelope = GrowthEnvelope(p, q, L, omega)
        return self._envelope

    # -- serialization ------------------------------------------------------
    def params(self):
        raise NotImplementedError

    def to_dict(self):
        out = {"family": self.family, "params": self.params()}
        if self.domain is not None:
            out["domain"] = {"lo": list(self.domain[0]), "hi": list(self.domain[1])}
        if self._omega is not None:
            out["omega"] = self._omega.to_dict()
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


class BoundPhi:
    """phi with coefficients frozen at a fixed set of points."""

    def __init__(self, phi, coeffs):
        self.phi = phi
        self.coeffs = coeffs

    def value(self, t):
        return self.phi._value(self.coeffs, _check_t(t))

    def deriv(self, t):
        return self.phi._deriv(self.coeffs, _check_t(t))


class PowerLaw(PhiFunction):
    family = "PowerLaw"

    def __init__(self, p, domain=None, omega=None):
        super().__init__(domain, omega)
        if not p > 1:
            raise ValueError("PowerLaw needs p > 1")
        self.p = float(p)

    @property
    def autonomous(self):
        return True

    def _coeffs(self, x):
        return None

    def _value(self, c, t):
        return _safe_pow(t, self.p)

    def _deriv(self, c, t):
        return self.p * _safe_pow(t, self.p - 1)

    def _pq(self):
        return self.p, self.p

    def params(self):
        return {"p": self.p}


def _orlicz_excess(p):
    """Upper bound for t phi'/phi - p and t phi''/phi' - (p-1) of t^p log(e+t)."""
    t = np.logspace(-8, 12, 4001)
    lg = np.log(EULER + t)
    f = t ** p * lg
    f1 = p * t ** (p - 1) * lg + t ** p / (EULER + t)
    f2 = (p * (p - 1) * t ** (p - 2) * lg + 2 * p * t ** (p - 1) / (EULER + t)
          - t ** p / (EULER + t) ** 2)
    sup = max(np.max(t * f1 / f - p), np.max(t * f2 / f1 - (p - 1)))
    return float(np.ceil(sup * 1000 + 1) / 1000)


class PerturbedOrlicz(PhiFunction):
    """a(x) * t^p * log(e + t) with a(x) > 0."""

    family = "PerturbedOrlicz"

    def __init__(self, a, p, domain, omega=None):
        super().__init__(domain, omega)
        if not p > 1:
            raise ValueError("PerturbedOrlicz needs p > 1")
        self.a = expr_parse(a)
        self.p = float(p)
        if np.any(self.a(self.sample_points()) <= 0):
            raise ValueError("coefficient a(x) must be positive on the domain")

    def _coeffs(self, x):
        a = self.a(x)
        if np.any(a < 0):
            raise ValueError("coefficient a(x) must be nonnegative")
        return a

    def _value(self, a, t):
        return a * _safe_pow(t, self.p) * np.log(EULER + t)

    def _deriv(self, a, t):
        tp = _safe_pow(t, self.p)
        return a * (self.p * _safe_pow(t, self.p - 1) * np.log(EULER + t) + tp / (EULER + t))

    def _pq(self):
        return self.p, self.p + _orlicz_excess(self.p)

    def params(self):
        return {"a": self.a.source, "p": self.p}


class VariableExponent(PhiFunction):
    """t^p(x) with p(x) > 1."""

    family = "VariableExponent"

    def __init__(self, p, domain, omega=None):
        super().__init__(domain, omega)
        self.p = expr_parse(p)
        if np.any(self.p(self.sample_points()) <= 1):
            raise ValueError("exponent p(x) must exceed 1 on the domain")

    def _coeffs(self, x):
        return self.p(x)

    def _value(self, p, t):
        return _safe_pow(t, p)

    def _deriv(self, p, t):
        return p * _safe_pow(t, p - 1)

    def _pq(self):
        vals = self.p(self.sample_points(65))
        return float(np.min(vals)), float(np.max(vals))

    def params(self):
        return {"p": self.p.source}


class DoublePhase(PhiFunction):
    """t^p + a(x) t^q with a(x) >= 0."""

    family = "DoublePhase"

    def __init__(self, p, q, a, domain, omega=None):
        super().__init__(domain, omega)
        if not 1 < p <= q:
            raise ValueError("DoublePhase needs 1 < p <= q")
        self.p, self.q = float(p), float(q)
        self.a = expr_parse(a)
        if np.any(self.a(self.sample_points()) < 0):
            raise ValueError("coefficient a(x) must be nonnegative")

    def _coeffs(self, x):
        a = self.a(x)
        if np.any(a < 0):
            raise ValueError("coefficient a(x) must be nonnegative")
        return a

    def _value(self, a, t):
        return _safe_pow(t, self.p) + a * _safe_pow(t, self.q)

    def _deriv(self, a, t):
        return self.p * _safe_pow(t, self.p - 1) + a * self.q * _safe_pow(t, self.q - 1)

    def _pq(self):
        return self.p, self.q

    def params(self):
        return {"p": self.p, "q": self.q, "a": self.a.source}


class Tabulated(PhiFunction):
    """Autonomous integrand from samples, interpolated linearly in log-log scale.

    Outside the table the function continues as a power law with exponent
    ``p`` towards 0 and ``q`` towards infinity. An optional derivative table is
    interpolated the same way; without it the right derivative of the
    interpolant is used.
    """

    family = "Tabulated"

    def __init__(self, t, phi, dphi=None, p=None, q=None, omega=None):
        super().__init__(None, omega)
        t = np.asarray(t, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if t.ndim != 1 or t.size < 2 or t.shape != phi.shape:
            raise ValueError("table needs matching 1D arrays with at least 2 samples")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("table abscissae must be positive and increasing")
        if np.any(phi <= 0) or np.any(np.diff(phi) < 0):
            raise ValueError("table values must be positive and nondecreasing")
        self.t, self.values = t, phi
        self._lt, self._lv = np.log(t), np.log(phi)
        self._slopes = np.diff(self._lv) / np.diff(self._lt)
        self.dvalues = None if dphi is None else np.asarray(dphi, dtype=float)
        if self.dvalues is not None:
            if self.dvalues.shape != t.shape or np.any(self.dvalues <= 0):
                raise ValueError("derivative table must be positive and match t")
            self._ld = np.log(self.dvalues)
        self.p = float(p) if p is not None else max(float(np.min(self._slopes)), 1.0 + 1e-9)
        self.q = float(q) if q is not None else max(float(np.max(self._slopes)), self.p)

    @property
    def autonomous(self):
        return True

    def _coeffs(self, x):
        return None

    def _value(self, c, t):
        lt = np.log(np.where(t > 0, t, 1.0))
        inner = np.exp(np.interp(lt, self._lt, self._lv))
        below = self.values[0] * np.exp(self.p * (lt - self._lt[0]))
        above = self.values[-1] * np.exp(self.q * (lt - self._lt[-1]))
        out = np.where(lt < self._lt[0], below, np.where(lt > self._lt[-1], above, inner))
        return np.where(t > 0, out, 0.0)

    def _deriv(self, c, t):
        tt = np.where(t > 0, t, 1.0)
        lt = np.log(tt)
        if self.dvalues is not None:
            inner = np.exp(np.interp(lt, self._lt, self._ld))
            below = self.dvalues[0] * np.exp((self.p - 1) * (lt - self._lt[0]))
            above = self.dvalues[-1] * np.exp((self.q - 1) * (lt - self._lt[-1]))
            out = np.where(lt < self._lt[0], below, np.where(lt > self._lt[-1], above, inner))
        else:
            idx = np.clip(np.searchsorted(self._lt, lt, side="right") - 1, 0, self._slopes.size - 1)
            slope = np.where(lt < self._lt[0], self.p,
                             np.where(lt >= self._lt[-1], self.q, self._slopes[idx]))
            out = slope * self._value(None, tt) / tt
        return np.where(t > 0, out, 0.0)

    def _pq(self):
        return self.p, self.q

    def params(self):
        out = {"t": self.t.tolist(), "phi": self.values.tolist(), "p": self.p, "q": self.q}
        if self.dvalues is not None:
            out["dphi"] = self.dvalues.tolist()
        return out


class BlowupPhi(PhiFunction):
    """phi_j(x, t) = phi(x0 + r x, sigma t) / phi(x0, sigma)."""

    family = "Blowup"

    def __init__(self, base, r, sigma, center=None):
        if not r > 0 or not sigma > 0:
            raise ValueError("blow-up radius and scale must be positive")
        d = 1 if base.domain is None else len(base.domain[0])
        center = np.zeros(d) if center is None else np.atleast_1d(np.asarray(center, float))
        domain = None
        if base.domain is not None:
            lo, hi = (np.array(b) for b in base.domain)
            domain = ((lo - center) / r, (hi - center) / r)
        super().__init__(domain, base._omega, None)
        self.base, self.r, self.sigma, self.center = base, float(r), float(sigma), center
        self.normalizer = float(base(center, sigma))
        if not self.normalizer > 0:
            raise DegenerateNormalizerError(f"phi(x0, {sigma}) = 0")

    @property
    def autonomous(self):
        return self.base.autonomous

    def _coeffs(self, x):
        return self.base.at(self.center + self.r * x)

    def _value(self, bound, t):
        return bound.value(self.sigma * t) / self.normalizer

    def _deriv(self, bound, t):
        return self.sigma * bound.deriv(self.sigma * t) / self.normalizer

    def _pq(self):
        env = self.base.envelope
        return env.p, env.q

    def params(self):
        return {"base": self.base.to_dict(), "r": self.r, "sigma": self.sigma,
                "center": self.center.tolist()}


_FAMILIES = {
    "PowerLaw": lambda prm, dom, om: PowerLaw(prm["p"], dom, om),
    "PerturbedOrlicz": lambda prm, dom, om: PerturbedOrlicz(prm["a"], prm["p"], dom, om),
    "VariableExponent": lambda prm, dom, om: VariableExponent(prm["p"], dom, om),
    "DoublePhase": lambda prm, dom, om: DoublePhase(prm["p"], prm["q"], prm["a"], dom, om),
    "Tabulated": lambda prm, dom, om: Tabulated(prm["t"], prm["phi"], prm.get("dphi"),
                                                prm.get("p"), prm.get("q"), om),
}


def phi_from_dict(spec, domain=None):
    """Build a PhiFunction from ``{"family": ..., "params": {...}}``."""
    try:
        family = spec["family"]
        params = spec.get("params", {})
    except (TypeError, KeyError):
        raise ValueError("phi descriptor needs 'family' and 'params'") from None
    if family not in _FAMILIES:
        raise ValueError(f"unknown phi family {family!r}")
    if "domain" in spec:
        domain = (spec["domain"]["lo"], spec["domain"]["hi"])
    omega = HolderModulus(**spec["omega"]) if "omega" in spec else None
    if family not in ("PowerLaw", "Tabulated") and domain is None:
        raise ValueError(f"{family} needs a domain box")
    try:
        return _FAMILIES[family](params, domain, omega)
    except KeyError as exc:
        raise ValueError(f"{family} is missing parameter {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# operations

def eval_phi(phi, x, t):
    return phi(x, t)


def eval_deriv(phi, x, t):
    return phi.deriv(x, t)


@dataclass
class BallEnvelope:
    ball: object
    t: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _ball_points(grid, ball):
    mask = ball.node_mask(grid)
    if not mask.any():
        raise DegenerateBallError(f"no grid node inside {ball}")
    return grid.nodes()[mask]


def ball_envelope(phi, ball, t_grid, grid):
    """Pointwise min/max of phi(x, t) over the grid nodes inside ``ball``."""
    t = np.asarray(t_grid, dtype=float)
    pts = _ball_points(grid, ball)
    vals = phi(pts[:, None, :], t[None, :])
    return BallEnvelope(ball, t, vals.min(axis=0), vals.max(axis=0))


def _lattice(phi, points):
    if points is None:
        points = phi.sample_points()
    points = np.asarray(points, dtype=float)
    return points.reshape(-1, points.shape[-1])


def _monotone_verdict(name, ratio, increasing, rtol):
    prev, nxt = ratio[:, :-1], ratio[:, 1:]
    scale = np.maximum(np.abs(prev), np.finfo(float).tiny)
    drop = (prev - nxt) / scale if increasing else (nxt - prev) / scale
    worst = float(np.max(drop))
    i, k = np.unravel_index(int(np.argmax(drop)), drop.shape)
    return ConditionVerdict(name, worst <= rtol, worst, {"point_index": int(i), "t_index": int(k)})


def check_inc(phi, p, points=None, t=None, rtol=RTOL_COND):
    """(inc)_p: t -> phi(x, t)/t^p nondecreasing on the sample lattice."""
    if not p > 0:
        raise ValueError("p must be positive")
    t = DEFAULT_T_GRID if t is None else np.asarray(t, dtype=float)
    pts = _lattice(phi, points)
    ratio = phi(pts[:, None, :], t[None, :]) / t[None, :] ** p
    return _monotone_verdict(f"inc_{p:g}", ratio, True, rtol)


def check_dec(phi, q, points=None, t=None, rtol=RTOL_COND):
    """(dec)_q: t -> phi(x, t)/t^q nonincreasing on the sample lattice."""
    if not q > 0:
        raise ValueError("q must be positive")
    t = DEFAULT_T_GRID if t is None else np.asarray(t, dtype=float)
    pts = _lattice(phi, points)
    ratio = phi(pts[:, None, :], t[None, :]) / t[None, :] ** q
    return _monotone_verdict(f"dec_{q:g}", ratio, False, rtol)


def check_A0(phi, L, points=None, rtol=RTOL_COND):
    """(A0): 1/L <= phi(x, 1) <= L at every sample point."""
    pts = _lattice(phi, points)
    v = phi(pts, 1.0)
    worst = float(max(np.max(v) / L, (1.0 / L) / np.min(v)))
    return ConditionVerdict("A0", worst <= 1 + rtol, worst,
                            {"min": float(np.min(v)), "max": float(np.max(v)), "L": L})


def check_VA1(phi, omega, balls, grid, t=None, rtol=RTOL_COND):
    """(VA1) on each ball, restricted to t with phi^-(t) in [omega(r), 1/|B_r|]."""
    t = DEFAULT_T_GRID if t is None else np.asarray(t, dtype=float)
    worst, failing, tested = -np.inf, [], 0
    for ball in balls:
        env = ball_envelope(phi, ball, t, grid)
        w = float(omega(ball.radius))
        window = (env.lower >= w) & (env.lower <= 1.0 / ball_measure(ball.radius, grid.d))
        if not window.any():
            continue
        tested += 1
        excess = env.upper[window] / ((1 + w) * env.lower[window]) - 1
        ball_worst = float(np.max(excess))
        worst = max(worst, ball_worst)
        if ball_worst > rtol:
            failing.append(ball)
    return ConditionVerdict("VA1", not failing, worst,
                            {"failing_balls": failing, "balls_tested": tested})


def check_sandwich(phi, points=None, s=None, t=None, p=None, q=None, rtol=RTOL_COND):
    """Check min{t^p,t^q} phi(x,s) <= phi(x,ts) <= max{t^p,t^q} phi(x,s)
    together with p phi(x,t) <= t phi_t(x,t) <= q phi(x,t)."""
    env = phi.envelope
    p = env.p if p is None else p
    q = env.q if q is None else q
    s = np.logspace(-3, 3, 16) if s is None else np.asarray(s, dtype=float)
    tt = np.logspace(-2, 2, 16) if t is None else np.asarray(t, dtype=float)
    pts = _lattice(phi, points)
    bound = phi.at(pts[:, None, None, :])
    phis = bound.value(s[None, :, None])
    phits = bound.value(s[None, :, None] * tt[None, None, :])
    lo = np.minimum(tt ** p, tt ** q)[None, None, :] * phis
    hi = np.maximum(tt ** p, tt ** q)[None, None, :] * phis
    scale = np.maximum(phits, np.finfo(float).tiny)
    lower_slack = float(np.max((lo - phits) / scale))
    upper_slack = float(np.max((phits - hi) / scale))

    tg = DEFAULT_T_GRID
    b2 = phi.at(pts[:, None, :])
    f, df = b2.value(tg[None, :]), b2.deriv(tg[None, :])
    elastic = tg[None, :] * df / f
    cons1_low = float(np.max(p - elastic) / p)
    cons1_high = float(np.max(elastic - q) / q)
    worst = max(lower_slack, upper_slack, cons1_low, cons1_high)
    return ConditionVerdict("sandwich", worst <= rtol, worst, {
        "cons2_lower": lower_slack, "cons2_upper": upper_slack,
        "cons1_lower": cons1_low, "cons1_upper": cons1_high, "p": p, "q": q})


def blowup_phi(phi, r_j, sigma_j, center=None):
    return BlowupPhi(phi, r_j, sigma_j, center)


@dataclass
class RecessionReport:
    sigmas: np.ndarray
    increments: np.ndarray
    converged: bool
    convex: bool
    inc_ok: bool
    dec_ok: bool
    lower_const: float
    upper_const: float
    tables: np.ndarray


def recession_limit(phi, sigmas, t_grid, x0=None, tol=1e-3, rtol=1e-6):
    """Tabulate phi(x0, t sigma)/phi(x0, sigma) along ``sigmas``.

    Returns the last iterate as a :class:`Tabulated` function and a report of
    sup-norm Cauchy increments, convexity, and the (inc)_{p-1}/(dec)_{q-1}
    behaviour of its derivative (central differences in log-log scale).
    """
    sigmas = np.asarray(sigmas, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(sigmas) <= 0):
        raise ValueError("sigma sequence must be increasing")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t grid must be positive and increasing")
    d = 1 if phi.domain is None else len(phi.domain[0])
    x0 = np.zeros(d) if x0 is None else np.atleast_1d(np.asarray(x0, float))
    bound = phi.at(x0)
    tables = np.array([bound.value(t * s) / bound.value(s) for s in sigmas])
    dtab = sigmas[-1] * bound.deriv(t * sigmas[-1]) / bound.value(sigmas[-1])
    increments = np.max(np.abs(np.diff(tables, axis=0)), axis=1) if len(sigmas) > 1 else np.zeros(0)
    converged = bool(increments.size == 0 or increments[-1] <= tol)

    last = tables[-1]
    secant = np.diff(last) / np.diff(t)
    convex = bool(np.all(np.diff(secant) >= -rtol * np.abs(secant[1:])))

    env = phi.envelope
    lt, lv = np.log(t), np.log(last)
    elastic = np.gradient(lv, lt)
    dfd = elastic * last / t
    r_inc = dfd / t ** (env.p - 1)
    r_dec = dfd / t ** (env.q - 1)
    inc_ok = bool(np.all(np.diff(r_inc) >= -1e-3 * np.abs(r_inc[:-1])))
    dec_ok = bool(np.all(np.diff(r_dec) <= 1e-3 * np.abs(r_dec[:-1])))
    lower = np.minimum(t ** env.p, t ** env.q)
    upper = np.maximum(t ** env.p, t ** env.q)
    limit = Tabulated(t, last, dtab, env.p, env.q)
    report = RecessionReport(sigmas, increments, converged, convex, inc_ok, dec_ok,
                             float(np.min(tables / lower)), float(np.max(tables / upper)), tables)
    return limit, report
