import numpy as np
import pytest

from orliczfb import Ball, Grid, PreconditionError, RegularizationError, regularize
from orliczfb.phi import DoublePhase, PerturbedOrlicz, PowerLaw, VariableExponent
from orliczfb.regularize import ELASTICITY_TOL, RegularizedPhi

UNIT = ((0.0, 0.0), (1.0, 1.0))
GRID = Grid.unit(2, 64)


def elasticity_ok(reg, p, q, tol=ELASTICITY_TOL):
    t = reg.table.t
    e = t * reg.second(t) / reg.deriv(np.zeros(1), t)
    return np.all(e >= p - 1 - tol) and np.all(e <= q - 1 + tol)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.5])
def test_power_reproduced(p):
    reg = regularize(PowerLaw(p))
    t = np.logspace(-3, 3, 25)
    np.testing.assert_allclose(reg(np.zeros(1), t), t ** p, rtol=1e-6)


def test_double_phase_on_small_ball():
    phi = DoublePhase(2, 3, "pow(abs(x1 - 0.5), 0.5)", UNIT)
    ball = Ball((0.5, 0.5), 0.25)
    reg = regularize(phi, ball, GRID)
    assert np.isfinite(reg.c_cmp) and reg.c_cmp > 0
    nodes = GRID.nodes()[ball.node_mask(GRID)]
    t = np.logspace(-3, 3, 40)
    bound = reg.c_cmp * (phi(nodes[:, None, :], t[None, :]) + 1.0)
    assert np.all(reg(np.zeros(1), t)[None, :] <= bound * (1 + 1e-9))
    assert elasticity_ok(reg, 2, 3)


def test_table_convex():
    reg = regularize(VariableExponent("2 + 0.5*x1", UNIT), Ball((0.4, 0.4), 0.2), GRID)
    assert np.all(np.diff(reg.table.dphi) >= 0)
    assert np.all(reg.second(reg.table.t) >= 0)


def test_value_and_derivative_consistent():
    reg = regularize(PerturbedOrlicz("1 + x1", 2.0, UNIT), Ball((0.5, 0.5), 0.2), GRID)
    t = np.logspace(-2, 2, 200)
    dt = 1e-6 * t
    fd = (reg(np.zeros(1), t + dt) - reg(np.zeros(1), t - dt)) / (2 * dt)
    np.testing.assert_allclose(fd, reg.deriv(np.zeros(1), t), rtol=1e-5)


def test_minimum_over_doubled_ball_is_below_phi():
    phi = DoublePhase(2, 3, "x1", UNIT)
    ball = Ball((0.5, 0.5), 0.2)
    reg = regularize(phi, ball, GRID)
    t = np.logspace(-1, 1, 9)
    # the doubled ball reaches x1 = 0.1, so the surrogate sits near t^2 + 0.1 t^3
    assert np.all(reg(np.zeros(1), t) <= phi(np.array([0.5, 0.5]), t))


def test_needs_ball_for_nonautonomous():
    with pytest.raises(ValueError):
        regularize(DoublePhase(2, 3, "x1", UNIT))


def test_empty_ball():
    with pytest.raises(PreconditionError):
        regularize(DoublePhase(2, 3, "x1", UNIT), Ball((0.501, 0.501), 1e-4), GRID)


def test_verification_failure_is_loud():
    t = np.logspace(-2, 2, 50)
    # elasticity 3 exceeds the declared q - 1 = 1
    reg = RegularizedPhi(t, t ** 3, np.full(t.size, 3.0), 2.0, 2.0)
    from orliczfb.regularize import _verify
    with pytest.raises(RegularizationError) as info:
        _verify(reg, 2.0, 2.0)
    assert "elasticity" in str(info.value)
    assert info.value.diagnostics["elasticity_max"] == pytest.approx(3.0)
