import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orliczfb import Ball, DomainError, Grid
from orliczfb.exceptions import DegenerateBallError, DegenerateNormalizerError
from orliczfb.phi import (DoublePhase, HolderModulus, PerturbedOrlicz, PowerLaw, Tabulated,
                          VariableExponent, ball_envelope, blowup_phi, check_A0, check_dec,
                          check_inc, check_sandwich, check_VA1, eval_deriv, eval_phi,
                          phi_from_dict, recession_limit)

from conftest import BOX2

ORIGIN = np.zeros(2)


def families():
    return [
        PowerLaw(2.5, domain=BOX2),
        PerturbedOrlicz("1 + 0.5*abs(x1)", 2.0, BOX2),
        VariableExponent("2 + 0.5*abs(x1)", BOX2),
        DoublePhase(2, 3, "pow(abs(x1), 0.5)", BOX2),
    ]


class TestEvaluation:
    def test_power_value(self):
        assert eval_phi(PowerLaw(2), ORIGIN[:1], 3.0) == pytest.approx(9.0)

    def test_double_phase_value(self):
        phi = DoublePhase(2, 3, "abs(x1)", BOX2)
        assert eval_phi(phi, np.array([1.0, 0.0]), 2.0) == pytest.approx(12.0)

    def test_variable_exponent_value(self):
        phi = VariableExponent("2.5", BOX2)
        assert eval_phi(phi, ORIGIN, 4.0) == pytest.approx(32.0)

    def test_power_derivative(self):
        assert eval_deriv(PowerLaw(2), ORIGIN[:1], 3.0) == pytest.approx(6.0)

    def test_double_phase_derivative(self):
        phi = DoublePhase(2, 3, "abs(x1)", BOX2)
        assert eval_deriv(phi, np.array([1.0, 0.0]), 2.0) == pytest.approx(16.0)

    @pytest.mark.parametrize("phi", families(), ids=lambda p: p.family)
    def test_derivative_vanishes_at_zero(self, phi):
        assert eval_deriv(phi, ORIGIN, 0.0) == 0.0
        assert eval_phi(phi, ORIGIN, 0.0) == 0.0

    def test_negative_t_rejected(self):
        with pytest.raises(DomainError):
            eval_phi(PowerLaw(2), ORIGIN[:1], -1.0)

    def test_point_outside_box_rejected(self):
        with pytest.raises(DomainError):
            eval_phi(DoublePhase(2, 3, "abs(x1)", BOX2), np.array([2.0, 0.0]), 1.0)

    @pytest.mark.parametrize("phi", families(), ids=lambda p: p.family)
    def test_derivative_integrates_back(self, phi):
        x = np.array([0.3, -0.2])
        s = np.logspace(-8, 1, 4001)
        d = phi.deriv(x, s)
        # trapezoid on a log grid: int f ds = int f s dlog s
        integral = np.trapezoid(d * s, np.log(s)) + phi(x, s[0])
        assert integral == pytest.approx(phi(x, s[-1]), rel=1e-4)

    @given(st.floats(1.1, 6.0), st.floats(1e-3, 1e3))
    def test_power_cons1_equality(self, p, t):
        phi = PowerLaw(p)
        assert t * phi.deriv(ORIGIN[:1], t) == pytest.approx(p * phi(ORIGIN[:1], t), rel=1e-12)


class TestEnvelope:
    def test_double_phase_lower_upper(self):
        grid = Grid((-1.0, -1.0), (1.0, 1.0), (33, 33))
        phi = DoublePhase(2, 3, "max(x1, 0)", BOX2)
        ball = Ball((0.0, 0.0), 1.0)
        env = ball_envelope(phi, ball, np.array([2.0]), grid)
        amax = np.max(np.maximum(grid.nodes()[ball.node_mask(grid)][:, 0], 0))
        assert env.lower[0] == pytest.approx(4.0)
        assert env.upper[0] == pytest.approx(4.0 + 8.0 * amax)

    def test_autonomous_envelope_is_tight(self, grid2):
        t = np.logspace(-2, 2, 9)
        env = ball_envelope(PowerLaw(3, domain=((0, 0), (1, 1))), Ball((0.5, 0.5), 0.2), t, grid2)
        np.testing.assert_allclose(env.lower, t ** 3)
        np.testing.assert_allclose(env.upper, t ** 3)

    def test_zero_t(self, grid2):
        phi = DoublePhase(2, 3, "x1", ((0, 0), (1, 1)))
        env = ball_envelope(phi, Ball((0.5, 0.5), 0.2), np.array([0.0]), grid2)
        assert env.lower[0] == env.upper[0] == 0.0

    def test_empty_ball(self, grid2):
        with pytest.raises(DegenerateBallError):
            ball_envelope(PowerLaw(2, domain=((0, 0), (1, 1))), Ball((0.51, 0.51), 1e-3),
                          np.array([1.0]), grid2)

    def test_matches_analytic_for_monotone_weight(self):
        grid = Grid((-1.0, -1.0), (1.0, 1.0), (41, 41))
        phi = DoublePhase(2, 3, "x1 + 1", BOX2)
        ball = Ball((0.2, 0.1), 0.35)
        t = np.logspace(-1, 1, 7)
        x1 = grid.nodes()[ball.node_mask(grid)][:, 0]
        env = ball_envelope(phi, ball, t, grid)
        np.testing.assert_allclose(env.lower, t ** 2 + (x1.min() + 1) * t ** 3)
        np.testing.assert_allclose(env.upper, t ** 2 + (x1.max() + 1) * t ** 3)


class TestConditions:
    def test_inc(self):
        assert check_inc(PowerLaw(2), 2).passed
        assert not check_inc(PowerLaw(2), 2.1).passed
        assert check_inc(DoublePhase(2, 3, "abs(x1)", BOX2), 2).passed

    def test_dec(self):
        dp = DoublePhase(2, 3, "abs(x1)", BOX2)
        assert check_dec(PowerLaw(2), 2).passed
        assert check_dec(dp, 3).passed
        assert not check_dec(dp, 2.5).passed

    def test_A0(self):
        dp = DoublePhase(2, 3, "3*abs(x1)", BOX2)
        assert check_A0(PowerLaw(2), 1).passed
        assert check_A0(dp, 4).passed
        verdict = check_A0(dp, 2)
        assert not verdict.passed and verdict.details["max"] == pytest.approx(4.0)

    def test_sandwich(self):
        v = check_sandwich(PowerLaw(2))
        assert v.passed and abs(v.details["cons1_lower"]) < 1e-12
        assert check_sandwich(DoublePhase(2, 3, "abs(x1)", BOX2)).passed
        assert not check_sandwich(PowerLaw(2), p=2.1).passed

    def test_VA1(self):
        grid = Grid((-1.0, -1.0), (1.0, 1.0), (65, 65))
        rng = np.random.default_rng(0x5EED)
        balls = [Ball(tuple(rng.uniform(-0.5, 0.5, 2)), r) for r in (0.05, 0.1, 0.2, 0.3, 0.1)]
        assert check_VA1(PowerLaw(2, domain=BOX2), HolderModulus(), balls, grid).passed
        assert check_VA1(DoublePhase(2, 3, "abs(x1)", BOX2), HolderModulus(10, 1), balls, grid).passed
        bad = DoublePhase(2, 30, "pow(abs(x1), 0.1)", BOX2)
        assert not check_VA1(bad, HolderModulus(1, 0.1), balls, grid).passed

    def test_verdict_is_truthy(self):
        assert bool(check_inc(PowerLaw(2), 2))
        assert not bool(check_inc(PowerLaw(2), 3))

    @pytest.mark.parametrize("phi", families(), ids=lambda p: p.family)
    def test_envelope_exponents_pass(self, phi):
        env = phi.envelope
        assert check_inc(phi, env.p).passed
        assert check_dec(phi, env.q).passed
        assert check_A0(phi, env.L).passed
        assert check_sandwich(phi).passed


class TestBlowupPhi:
    @given(st.floats(1e-6, 1.0), st.floats(1e-3, 1e6))
    @settings(max_examples=30)
    def test_power_scale_invariance(self, r, sigma):
        t = np.linspace(0, 10, 21)
        phi = blowup_phi(PowerLaw(2.5), r, sigma)
        np.testing.assert_allclose(phi(ORIGIN[:1], t), t ** 2.5, rtol=1e-12)

    def test_variable_exponent_freezes_at_origin(self):
        phi = VariableExponent("2 + 0.5*abs(x1)", BOX2)
        b = blowup_phi(phi, 1e-9, 10.0)
        assert b(np.array([0.5, 0.3]), 3.0) == pytest.approx(9.0, rel=1e-7)

    def test_normalization(self):
        phi = DoublePhase(2, 3, "1 + abs(x1)", BOX2)
        assert blowup_phi(phi, 0.1, 17.0)(ORIGIN, 1.0) == pytest.approx(1.0)

    def test_degenerate_normalizer(self):
        with pytest.raises(DegenerateNormalizerError):
            blowup_phi(PowerLaw(2), 0.1, 1e-200)   # phi(0, sigma) underflows to 0

    def test_nonpositive_scale(self):
        with pytest.raises(ValueError):
            blowup_phi(PowerLaw(2), 0.1, 0.0)


class TestRecession:
    def test_power(self):
        t = np.logspace(-1, 1, 30)
        lim, rep = recession_limit(PowerLaw(2), 2.0 ** np.arange(6), t)
        assert np.all(rep.increments == 0)
        np.testing.assert_allclose(lim(ORIGIN[:1], t), t ** 2, rtol=1e-10)

    def test_double_phase_tends_to_top_power(self):
        t = np.logspace(-1, 1, 50)
        lim, rep = recession_limit(DoublePhase(2, 3, "1 + abs(x1)", BOX2), 2.0 ** np.arange(41), t)
        assert np.max(np.abs(lim(ORIGIN, t) - t ** 3)) <= 1e-3
        assert rep.converged and rep.convex

    def test_uniform_envelope_bound(self):
        t = np.logspace(-1, 1, 50)
        _, rep = recession_limit(DoublePhase(2, 3, "1 + abs(x1)", BOX2), 2.0 ** np.arange(20), t)
        assert rep.lower_const >= 1 - 1e-12
        assert np.isfinite(rep.upper_const)

    def test_rejects_decreasing_sigmas(self):
        with pytest.raises(ValueError):
            recession_limit(PowerLaw(2), [4.0, 2.0], [1.0, 2.0])


class TestSerialization:
    @pytest.mark.parametrize("phi", families(), ids=lambda p: p.family)
    def test_round_trip(self, phi):
        back = phi_from_dict(phi.to_dict())
        x = np.array([[0.2, -0.4], [0.7, 0.1]])
        t = np.array([[0.5], [3.0]])
        np.testing.assert_allclose(back(x, t), phi(x, t))

    def test_tabulated_round_trip(self):
        t = np.logspace(-2, 2, 20)
        tab = Tabulated(t, t ** 2)
        back = phi_from_dict(tab.to_dict())
        np.testing.assert_allclose(back(ORIGIN[:1], t), t ** 2, rtol=1e-10)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown"):
            phi_from_dict({"family": "Nope", "params": {}})

    def test_missing_domain(self):
        with pytest.raises(ValueError, match="domain"):
            phi_from_dict({"family": "DoublePhase", "params": {"p": 2, "q": 3, "a": "x1"}})


def test_tabulated_extrapolates_with_end_powers():
    t = np.logspace(-1, 1, 41)
    tab = Tabulated(t, t ** 2 + t ** 3, p=2, q=3)
    assert tab(ORIGIN[:1], 100.0) == pytest.approx(1e6 * (1 + 0.1), rel=0.2)
    assert tab(ORIGIN[:1], 1e-3) > 0


def test_modulus():
    w = HolderModulus(2.0, 0.5)
    assert w(0.25) == pytest.approx(1.0)
    assert w(0.01) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        HolderModulus(1.0, 1.5)
