import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from orliczfb import Ball, Field, Grid, PreconditionError
from orliczfb.grid import restrict
from orliczfb.phi import DoublePhase, PowerLaw
from orliczfb.solver import (AltCaffarelliMinimizer, CompetitorSpec, Functional,
                             HarmonicReplacement, SolveOptions, check_almost_min, energy,
                             free_boundary_slope, harmonic_replacement, minimize, solve_1d_exact)
from orliczfb.solver.almost_min import competitors

UNIT = ((0.0, 0.0), (1.0, 1.0))


def square(cells):
    return Grid.unit(2, cells)


class TestEnergy:
    def test_zero(self):
        g = square(16)
        assert energy(Functional(DoublePhase(2, 3, "x1", UNIT), 1.0, g), Field.zeros(g)) == 0.0

    @pytest.mark.parametrize("cells", [32, 64, 128])
    def test_cone(self, cells):
        g = square(cells)
        u = Field.from_expression(g, "max(x1 - 0.5, 0)")
        assert abs(energy(Functional(PowerLaw(2), 1.0, g), u) - 1.0) <= g.hmax

    @pytest.mark.parametrize("b", [0.5, 1.0, 3.0])
    def test_linear_1d(self, b):
        g = Grid.unit(1, 64)
        u = Field.from_expression(g, f"{b}*x1")
        assert energy(Functional(PowerLaw(2), 1.0, g), u) == pytest.approx(b * b + 1)

    def test_negative_field_rejected(self):
        g = Grid.unit(1, 8)
        with pytest.raises(PreconditionError):
            energy(Functional(PowerLaw(2), 1.0, g), Field(g, -np.ones(g.shape)))

    def test_lambda_must_be_positive(self):
        with pytest.raises(ValueError):
            Functional(PowerLaw(2), 0.0, square(8))


class TestExact1D:
    def test_cone(self):
        sol = solve_1d_exact(PowerLaw(2), 1.0, 0.0, 0.5)
        assert sol.energy == pytest.approx(1.0)
        assert sol.lambda_star == pytest.approx(1.0)
        assert sol.breakpoints[1] == pytest.approx(0.5)
        assert sol.slope_residual <= 1e-10

    def test_linear_when_cone_does_not_fit(self):
        sol = solve_1d_exact(PowerLaw(2), 1.0, 0.0, 2.0)
        assert sol.kind == "linear"
        assert sol.energy == pytest.approx(5.0)

    def test_zero(self):
        sol = solve_1d_exact(PowerLaw(3), 2.0, 0.0, 0.0)
        assert sol.kind == "zero" and sol.energy == 0.0
        assert np.all(sol(np.linspace(0, 1, 5)) == 0)

    def test_negative_data(self):
        with pytest.raises(ValueError):
            solve_1d_exact(PowerLaw(2), 1.0, -0.1, 0.5)

    @given(st.floats(1.2, 5.0), st.floats(0.1, 10.0))
    def test_slope_law(self, p, lam):
        G = PowerLaw(p)
        s, resid = free_boundary_slope(G, lam)
        # for t^p: s G'(s) - G(s) = (p - 1) s^p
        assert s == pytest.approx((lam / (p - 1)) ** (1 / p), rel=1e-10)
        assert resid <= 1e-10 * max(1.0, lam)

    @given(st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.integers(0, 2 ** 31))
    @settings(max_examples=25, deadline=None)
    def test_lower_bound_for_random_fields(self, a, b, seed):
        sol = solve_1d_exact(PowerLaw(2), 1.0, a, b)
        g = Grid.unit(1, 64)
        F = Functional(PowerLaw(2), 1.0, g)
        rng = np.random.default_rng(seed)
        for scale in (0.0, 0.05, 0.5):
            v = sol(g.axes()[0]) + scale * rng.uniform(-1, 1, g.shape)
            v[0], v[-1] = a, b
            v = np.maximum(v, 0.0)
            assert energy(F, Field(g, v)) >= sol.energy - 3 * g.hmax * (1 + a + b)


class TestMinimize:
    def test_1d_matches_oracle(self):
        g = Grid.unit(1, 64)
        res = minimize(Functional(PowerLaw(2), 1.0, g), Field.from_expression(g, "0.5*x1"))
        x = g.axes()[0]
        assert abs(res.energy - 1.0) <= 3 * g.hmax
        assert np.max(np.abs(res.field.values - np.maximum(x - 0.5, 0))) <= 2 * g.hmax

    def test_planar_2d(self):
        g = square(32)
        data = Field.from_expression(g, "max(x1 - 0.5, 0)")
        res = minimize(Functional(PowerLaw(2), 1.0, g), data)
        assert res.converged
        assert np.max(np.abs(res.field.values - data.values)) <= 5 * g.hmax

    def test_zero_data(self):
        g = square(16)
        res = minimize(Functional(PowerLaw(2), 1.0, g), Field.zeros(g))
        assert res.energy == 0.0 and np.all(res.field.values == 0)

    def test_contract(self):
        g = square(16)
        data = Field.from_expression(g, "max(x2 - 0.4, 0) * (1 + 0.5*x1)")
        F = Functional(DoublePhase(2, 3, "pow(abs(x1 - 0.5), 0.5)", UNIT), 1.0, g)
        res = minimize(F, data)
        mask = g.boundary_mask()
        assert np.array_equal(res.field.values[mask], data.values[mask])
        assert np.all(res.field.values >= 0)
        assert res.energy <= res.smoothed_stage_energy + 1e-12
        for s in np.geomspace(1e-4, 1.0, 12):
            trunc = np.where(mask, data.values, np.maximum(res.field.values - s, 0))
            assert res.energy <= energy(F, Field(g, trunc)) + 1e-12

    def test_global_competitors_do_not_win(self):
        g = square(16)
        data = Field.from_expression(g, "max(x2 - 0.4, 0)")
        F = Functional(PowerLaw(2), 1.0, g)
        u = minimize(F, data).field
        ball = Ball((0.5, 0.5), 0.45)
        rng = np.random.default_rng(0)
        for _, w in competitors(F, u, ball, CompetitorSpec(), rng):
            assert energy(F, u) <= energy(F, Field(g, w)) * (1 + 1e-9)

    def test_negative_data_rejected(self):
        g = square(8)
        with pytest.raises(PreconditionError):
            minimize(Functional(PowerLaw(2), 1.0, g), Field(g, -np.ones(g.shape)))

    def test_options_validated(self):
        with pytest.raises(ValueError):
            SolveOptions(gtol=0.0)


class TestReplacement:
    def test_constant(self):
        g = square(32)
        u = Field(g, np.full(g.shape, 0.7))
        w = harmonic_replacement(PowerLaw(3), u, Ball((0.5, 0.5), 0.3))
        np.testing.assert_allclose(w.values, 0.7, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_linear(self, p):
        g = square(32)
        u = Field.from_expression(g, "0.3 + 2*x1 - x2")
        w = harmonic_replacement(PowerLaw(p), u, Ball((0.5, 0.5), 0.3))
        np.testing.assert_allclose(w.values, u.values, atol=1e-8)

    def test_untouched_outside_ball(self):
        g = square(32)
        u = Field(g, np.random.default_rng(0).uniform(size=g.shape))
        ball = Ball((0.4, 0.5), 0.2)
        w = harmonic_replacement(PowerLaw(2), u, ball)
        outside = ~ball.node_mask(g)
        assert np.array_equal(w.values[outside], u.values[outside])

    def test_log_oracle_coarse(self):
        L = 1.25
        g = Grid((-L, -L), (L, L), (161, 161))
        r = np.sqrt(np.sum(g.nodes() ** 2, axis=-1))
        vals = np.log(np.maximum(r, 0.05))
        u = Field(g, vals, g.boundary_mask() | (r <= 0.1))
        info = harmonic_replacement(PowerLaw(2), u, Ball((0.0, 0.0), 1.0), return_info=True)
        ring = (r < 1) & (r > 0.1)
        assert info.converged
        assert np.max(np.abs(info.field.values - vals)[ring]) <= 5e-3

    @given(st.integers(0, 2 ** 31), st.sampled_from([1.5, 2.0, 3.0]))
    @settings(max_examples=15, deadline=None)
    def test_maximum_principle(self, seed, p):
        g = square(24)
        rng = np.random.default_rng(seed)
        u = Field(g, rng.uniform(-1, 1, g.shape))
        ball = Ball(tuple(rng.uniform(0.35, 0.65, 2)), rng.uniform(0.1, 0.3))
        sub = restrict(u, ball)
        data = sub.values[sub.boundary_mask]
        w = harmonic_replacement(PowerLaw(p), u, ball).values[ball.node_mask(g)]
        assert w.min() >= data.min() - 1e-9 and w.max() <= data.max() + 1e-9

    def test_ball_outside_domain(self):
        g = square(16)
        with pytest.raises(ValueError):
            harmonic_replacement(PowerLaw(2), Field.zeros(g), Ball((0.9, 0.5), 0.3))


class TestAlmostMin:
    def setup_method(self):
        self.g = square(64)
        self.F = Functional(PowerLaw(2), 1.0, self.g)
        self.cone = Field.from_expression(self.g, "max(x1 - 0.5, 0)")

    def test_minimizer_passes_with_zero_kappa(self):
        cert = check_almost_min(self.F, self.cone, 0.0, 1.0,
                                [Ball((0.75, 0.5), 0.1), Ball((0.5, 0.5), 0.2)])
        assert cert.passed and cert.worst_ratio <= 1 + 1e-9

    def test_zero_field(self):
        cert = check_almost_min(self.F, Field.zeros(self.g), 0.0, 1.0, [Ball((0.5, 0.5), 0.2)])
        assert cert.passed and cert.worst_ratio == 0.0
        assert all(r["F_u"] == 0.0 for r in cert.records)

    def test_small_bump_passes_large_fails(self):
        ball = Ball((0.75, 0.5), 0.1)
        X = self.g.nodes()
        bump = np.clip(1 - np.sum((X - np.array(ball.center)) ** 2, axis=-1) / ball.radius ** 2, 0, None)
        small = self.cone.copy(self.cone.values + ball.radius ** 2 * bump)
        large = self.cone.copy(self.cone.values + 100 * ball.radius ** 2 * bump)
        assert check_almost_min(self.F, small, 1.0, 1.0, [ball]).passed
        cert = check_almost_min(self.F, large, 1.0, 1.0, [ball])
        assert not cert.passed and cert.worst_ratio > 1 + ball.radius

    def test_beta_range(self):
        with pytest.raises(ValueError):
            check_almost_min(self.F, self.cone, 0.0, 1.5, [Ball((0.5, 0.5), 0.1)])

    def test_records_are_complete(self):
        spec = CompetitorSpec(n_shifts=3, mollify_steps=(1,), n_random=2)
        cert = check_almost_min(self.F, self.cone, 0.0, 1.0, [Ball((0.7, 0.5), 0.1)], spec)
        names = [r["competitor"] for r in cert.records]
        assert names[0] == "replacement" and len(names) == 1 + 3 + 1 + 2


class TestEstimators:
    def test_minimizer_fit_predict(self):
        g = Grid.unit(1, 32)
        est = AltCaffarelliMinimizer(PowerLaw(2), 1.0).fit(Field.from_expression(g, "0.5*x1"))
        assert est.converged_
        assert est.predict([[0.25], [0.75]]) == pytest.approx([0.0, 0.25], abs=2 * g.hmax)
        assert est.score(None) == -est.energy_

    def test_minimizer_clone(self):
        est = AltCaffarelliMinimizer(PowerLaw(2), 2.0)
        assert clone(est).get_params()["lam"] == 2.0

    def test_minimizer_needs_phi(self):
        with pytest.raises(ValueError):
            AltCaffarelliMinimizer().fit(Field.zeros(Grid.unit(1, 8)))

    def test_replacement_transform(self):
        g = square(16)
        u = Field.from_expression(g, "x1 + x2")
        tr = HarmonicReplacement(PowerLaw(2), Ball((0.5, 0.5), 0.3))
        w = tr.fit_transform(u)
        np.testing.assert_allclose(w.values, u.values, atol=1e-8)
        assert tr.converged_
