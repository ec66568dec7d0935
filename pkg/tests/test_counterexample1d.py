"""Scalar counterexample: quadratures, explicit flow, Feller integral, MC."""

import numpy as np
import pytest
from scipy.stats import norm

from sdelab.counterexample1d import (
    ScalarModel,
    a_drift,
    b_antiderivative,
    explosion_criterion,
    explosion_mc_1d,
    feller_integral,
    ode_blowup_time_1d,
    ode_consistency_check,
    ode_solution_1d,
    phi_1d,
    phi_limit,
    positivity_audit,
)

QUAD = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0 + z * z, x0=0.0)
UNIT = ScalarModel(b=lambda z: 1.0, sigma=lambda z: 1.0, x0=0.0)
FELLER = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0, x0=0.0)


class TestAntiderivative:
    def test_arctan_limit(self):
        assert abs(b_antiderivative(QUAD, 1.0) - np.pi / 4) < 1e-10

    def test_identity_integrand(self):
        for x in (0.5, 1.0, 7.0):
            assert abs(b_antiderivative(UNIT, x) - x) < 1e-12

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 10.0, 25)
        vals = [b_antiderivative(QUAD, x) for x in grid]
        assert np.all(np.diff(vals) > 0.0)


class TestExplicitFlow:
    def test_tangent_solution(self):
        for t in (0.1, 0.5, 1.0, 1.5):
            assert abs(ode_solution_1d(QUAD, t) - np.tan(t)) < 1e-8

    def test_blowup_time(self):
        assert abs(ode_blowup_time_1d(QUAD) - np.pi / 2) < 1e-10

    def test_linear_flow_never_explodes(self):
        assert ode_blowup_time_1d(UNIT) is None
        assert abs(ode_solution_1d(UNIT, 4.0) - 4.0) < 1e-10

    def test_domain_error_at_blowup(self):
        with pytest.raises(ValueError):
            ode_solution_1d(QUAD, np.pi / 2)

    def test_independent_ode_oracle(self):
        assert ode_consistency_check(QUAD) < 1e-6


class TestExplosionCriterion:
    def test_arctan_finite(self):
        rep = explosion_criterion(QUAD)
        assert rep.finite
        assert abs(rep.value - np.pi / 2) < 1e-8

    def test_log_divergence_detected(self):
        rep = explosion_criterion(ScalarModel(b=lambda z: 1.0 + z, sigma=lambda z: 1.0))
        assert not rep.finite
        assert not rep.indeterminate

    def test_power_tail(self):
        rep = explosion_criterion(ScalarModel(b=lambda z: (1.0 + z) ** 1.5, sigma=lambda z: 1.0))
        assert rep.finite
        assert abs(rep.value - 2.0) < 1e-8


class TestScaleTransform:
    def test_arctan_branch(self):
        assert abs(phi_1d(QUAD, 1.0) - np.pi / 4) < 1e-10
        lim = phi_limit(QUAD)
        assert lim.finite and abs(lim.value - np.pi / 2) < 1e-8

    def test_identity_branch(self):
        assert abs(phi_1d(FELLER, 3.0) - 3.0) < 1e-12
        assert not phi_limit(FELLER).finite

    def test_strictly_increasing(self):
        vals = [phi_1d(QUAD, x) for x in np.linspace(-3.0, 3.0, 13)]
        assert np.all(np.diff(vals) > 0.0)

    def test_positivity_audit(self):
        assert positivity_audit(QUAD)
        assert not positivity_audit(ScalarModel(b=lambda z: z, sigma=lambda z: 1.0))


class TestImageDrift:
    def test_quotient_cancellation(self):
        for y in (0.1, 0.5, 1.0):
            assert abs(a_drift(QUAD, y) - 1.0) < 1e-9

    def test_identity_sigma(self):
        for y in (0.2, 1.0, 2.5):
            assert abs(a_drift(FELLER, y) - (1.0 + y * y)) < 1e-8

    def test_positive_on_grid(self):
        assert all(a_drift(FELLER, y) > 0.0 for y in np.linspace(0.0, 5.0, 11))

    def test_domain_error_outside_image(self):
        with pytest.raises(ValueError):
            a_drift(QUAD, 2.0)  # phi(inf) = pi/2 < 2


class TestFellerIntegral:
    def test_quadratic_drift_bounded_by_comparison(self):
        rep = feller_integral(FELLER)
        assert rep.double_integral.finite
        assert rep.comparison.finite
        assert abs(rep.comparison.value - np.pi / 2) < 1e-8
        assert rep.double_integral.value <= np.pi / 2 + 1e-6
        assert rep.inequality_ok

    def test_constant_drift_diverges(self):
        rep = feller_integral(UNIT, a_fn=lambda y: 1.0)
        assert not rep.double_integral.finite

    def test_finite_branch_rejected(self):
        with pytest.raises(ValueError):
            feller_integral(QUAD)


class TestExplosionMc:
    def test_inverse_gaussian_oracle(self):
        from sdelab.cli import inverse_gaussian_cdf

        mc = explosion_mc_1d(QUAD, n_paths=2000, dt=1e-3, checkpoints=(0.5, 1.0, 2.0, 5.0, 10.0), seed=11)
        assert mc.branch == "finite"
        level = np.pi / 2 - 1e-8
        assert inverse_gaussian_cdf(10.0, level, 1.0) >= 0.999
        assert mc.fractions[-1] >= 0.99
        assert abs(mc.fractions[0] - inverse_gaussian_cdf(0.5, level, 1.0)) <= 0.03

    def test_fractions_nondecreasing(self):
        mc = explosion_mc_1d(QUAD, n_paths=500, dt=1e-3, checkpoints=(0.5, 1.0, 2.0, 5.0), seed=3)
        assert all(b >= a for a, b in zip(mc.fractions, mc.fractions[1:]))

    def test_driftless_reflection_oracle(self):
        # A = 0 double with finite phi(inf): level hit by |W| from 0
        mc = explosion_mc_1d(QUAD, n_paths=2000, dt=1e-3, checkpoints=(5.0,), seed=5, drift_override=lambda y: np.zeros_like(y))
        level = np.pi / 2
        oracle = 2.0 * (1.0 - norm.cdf(level / np.sqrt(5.0)))
        assert abs(mc.fractions[0] - oracle) <= 0.03

    def test_infinite_branch_level_sensitivity(self):
        mc = explosion_mc_1d(FELLER, n_paths=200, dt=1e-3, checkpoints=(0.5, 1.0), seed=9, level_infinite=50.0)
        assert mc.branch == "infinite"
        assert mc.level_sensitivity is not None
        frac_l, frac_10l = mc.level_sensitivity
        assert frac_10l <= frac_l


class TestQuadratureStability:
    def test_values_stable_under_tolerance_tightening(self):
        loose = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0 + z * z, tol_abs=1e-10, tol_rel=1e-8)
        tight = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0 + z * z, tol_abs=1e-12, tol_rel=1e-10)
        for fn in (lambda m: b_antiderivative(m, 3.0), lambda m: phi_1d(m, 3.0), lambda m: explosion_criterion(m).value):
            v_loose, v_tight = fn(loose), fn(tight)
            assert abs(v_loose - v_tight) < 10.0 * 1e-8 * abs(v_tight)
