"""Almost-minimality certificates: F(u; B_r) <= (1 + kappa r^beta) F(w; B_r) over competitors w.

A competitor agrees with ``u`` outside the open ball. The local energy on a
ball is the sum of the cell energies over cells having a corner inside it.
"""
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..grid import cells_touching
from ..validation import check_ball, check_field, check_positive
from .functional import positivity_threshold
from .replacement import harmonic_replacement

__all__ = ["AlmostMinCert", "CompetitorSpec", "check_almost_min", "local_energy", "competitors"]

RTOL_ROUNDING = 1e-9


@dataclass
class CompetitorSpec:
    replacement: bool = True
    n_shifts: int = 12
    mollify_steps: tuple = (1, 4)
    n_random: int = 4
    random_amplitude: float = 0.05     # relative to the sup of u on the ball
    seed: int = 0x5EED


@dataclass
class AlmostMinCert:
    kappa: float
    beta: float
    balls: list
    worst_ratio: float
    passed: bool
    records: list = dc_field(default_factory=list)

    def __bool__(self):
        return self.passed


def local_energy(functional, values, ball, tau):
    mask = cells_touching(ball.node_mask(functional.grid))
    return float(np.sum(functional.cell_energy(values, tau)[mask]))


def _mollify(u, inside, steps):
    v = u.copy()
    for _ in range(steps):
        pad = np.pad(v, 1, mode="edge")
        avg = np.zeros_like(v)
        shifts = [(a,) for a in (-1, 0, 1)] if v.ndim == 1 else \
            [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]
        for sh in shifts:
            avg += pad[tuple(slice(1 + s, 1 + s + n) for s, n in zip(sh, v.shape))]
        v = np.where(inside, avg / len(shifts), v)
    return v


def competitors(functional, u, ball, spec, rng):
    """Yield ``(name, values)`` pairs for one ball."""
    values = u.values
    inside = ball.node_mask(u.grid) & ~u.boundary_mask
    top = float(np.max(values[inside], initial=0.0))
    if spec.replacement:
        w = harmonic_replacement(functional.phi, u, ball).values
        yield "replacement", np.where(inside, np.maximum(w, 0.0), values)
    if top > 0:
        for s in np.geomspace(1e-6 * top, top, spec.n_shifts):
            yield f"truncation:{s:.3e}", np.where(inside, np.maximum(values - s, 0.0), values)
    for k in spec.mollify_steps:
        yield f"mollified:{k}", _mollify(values, inside, k)
    # bump vanishing on the ball boundary, so the perturbation stays local
    dist = np.sqrt(np.sum((u.grid.nodes() - np.asarray(ball.center)) ** 2, axis=-1))
    bump = np.clip(1.0 - (dist / ball.radius) ** 2, 0.0, None)
    amp = spec.random_amplitude * max(top, 1.0)
    for i in range(spec.n_random):
        noise = rng.standard_normal(values.shape)
        yield f"random:{i}", np.where(inside, np.maximum(values + amp * bump * noise, 0.0), values)


def check_almost_min(functional, u, kappa, beta, balls, spec=None, rtol=RTOL_ROUNDING):
    """Largest ratio F(u; B_r) / F(w; B_r) over the generated competitors.

    A pair passes when the ratio is at most ``(1 + kappa r^beta)(1 + rtol)``;
    ``rtol`` absorbs floating-point rounding in the energy sums.
    """
    check_field(u, nonnegative=True)
    kappa = check_positive(kappa, "kappa", strict=False)
    beta = check_positive(beta, "beta")
    if beta > 1:
        raise ValueError("beta must lie in (0, 1]")
    spec = spec or CompetitorSpec()
    rng = np.random.default_rng(spec.seed)
    tau = positivity_threshold(u.values)
    records, worst, passed = [], 0.0, True
    for ball in balls:
        check_ball(ball, u.grid, inside=True)
        Fu = local_energy(functional, u.values, ball, tau)
        bound = 1.0 + kappa * ball.radius ** beta
        for name, w in competitors(functional, u, ball, spec, rng):
            Fw = local_energy(functional, w, ball, tau)
            if Fu == 0.0:
                ratio = 0.0
            elif Fw == 0.0:
                ratio = np.inf
            else:
                ratio = Fu / Fw
            ok = bool(ratio <= bound * (1.0 + rtol))
            passed &= ok
            worst = max(worst, ratio)
            records.append({"center": ball.center, "radius": ball.radius, "competitor": name,
                            "F_u": Fu, "F_w": Fw, "ratio": ratio, "bound": bound, "pass": ok})
    return AlmostMinCert(kappa, beta, list(balls), worst, passed, records)
