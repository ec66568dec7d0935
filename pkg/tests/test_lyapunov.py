"""Logarithmic Lyapunov calculus: closed forms, blending, fits, thresholds."""

import numpy as np
import pytest
from scipy.optimize import brentq

from sdelab.coefficients import DriftSpec, ModelParams
from sdelab.lyapunov import (
    FitError,
    LV_closed,
    LV_generic,
    LyapunovProfile,
    SuperLyapunovFit,
    V,
    V_many,
    grad_V,
    hess_V,
    k_threshold,
    lv_batch,
    negativity_radius,
    super_lyapunov_fit,
)

P2 = ModelParams(d=2, m=2.0, eta=1.0)
P3 = ModelParams(d=3, m=2.0, eta=1.0)
POWER = DriftSpec()
PROF = LyapunovProfile.for_params(0.5, P2)
ZERO_DRIFT = DriftSpec(kind="custom", evaluator=lambda x: np.zeros_like(x), growth_m=2.0, growth_c=0.0)


class TestProfile:
    def test_geometry(self):
        assert PROF.r0 == 2.0 and PROF.r1 == 3.0
        np.testing.assert_allclose(PROF.a_floor, 0.5 * np.log(3.0) ** 0.5)

    def test_alpha_range_enforced(self):
        for alpha in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                LyapunovProfile.for_params(alpha, P2)

    def test_exact_value(self):
        np.testing.assert_allclose(V(PROF, np.array([np.e**2, 0.0])), np.sqrt(2.0))

    def test_floor_and_growth(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((5000, 2)) * np.exp(rng.uniform(-3, 6, (5000, 1)))
        vals = V_many(PROF, X)
        assert np.all(vals >= PROF.a_floor - 1e-15)
        radii = np.geomspace(10.0, 1e12, 40)
        seq = V_many(PROF, radii[:, None] * np.array([1.0, 0.0])[None, :])
        assert np.all(np.diff(seq) > 0.0)
        assert seq[-1] > 5.0

    def test_plateau_constant(self):
        assert V(PROF, np.array([0.5, 0.0])) == PROF.a_floor
        assert V(PROF, np.zeros(2)) == PROF.a_floor


class TestDerivatives:
    def test_grad_example(self):
        x = np.array([np.e**2, 0.0])
        expected = 0.5 * 2.0**-0.5 * np.exp(-2.0)
        np.testing.assert_allclose(grad_V(PROF, x), [expected, 0.0], rtol=1e-12)

    def test_grad_hess_vs_central_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            x = rng.standard_normal(2)
            x *= rng.uniform(PROF.r1 * 1.02, 1e3) / np.linalg.norm(x)
            r = np.linalg.norm(x)
            hg = 1e-5 * max(1.0, r)
            gfd = np.array([(V(PROF, x + hg * e) - V(PROF, x - hg * e)) / (2 * hg) for e in np.eye(2)])
            g = grad_V(PROF, x)
            assert np.max(np.abs(g - gfd)) / np.max(np.abs(g)) < 1e-5
            hh = 1e-4 * max(1.0, r)
            H = hess_V(PROF, x)
            Hfd = np.empty((2, 2))
            for i in range(2):
                for j in range(2):
                    ei, ej = np.eye(2)[i] * hh, np.eye(2)[j] * hh
                    Hfd[i, j] = (
                        V(PROF, x + ei + ej) - V(PROF, x + ei - ej) - V(PROF, x - ei + ej) + V(PROF, x - ei - ej)
                    ) / (4 * hh * hh)
            assert np.max(np.abs(H - Hfd)) / np.max(np.abs(H)) < 1e-5

    def test_c2_blending_one_sided(self):
        # one-sided finite differences agree across both blend edges to 1e-4
        # (absolute scale 1: the profiles and their first two derivatives are O(1) here)
        for r_edge in (PROF.r0, PROF.r1):
            for fn in (lambda r: V(PROF, np.array([r, 0.0])), lambda r: grad_V(PROF, np.array([r, 0.0]))[0]):
                h = 1e-6
                left = (fn(r_edge - h) - fn(r_edge - 2 * h)) / h
                right = (fn(r_edge + 2 * h) - fn(r_edge + h)) / h
                assert abs(left - right) <= 1e-4 * max(1.0, abs(left), abs(right))

    def test_plateau_derivatives_vanish(self):
        assert np.all(grad_V(PROF, np.array([1.0, 0.5])) == 0.0)
        assert np.all(hess_V(PROF, np.array([1.0, 0.5])) == 0.0)


class TestGenerator:
    def test_closed_form_d2_display(self):
        # d=2 drops the (d-2)/eta term
        x = np.array([7.0, 3.0])
        r = np.linalg.norm(x)
        a = PROF.alpha
        bx = POWER(P2, x) @ x / r**2
        expected = a * np.log(r) ** (a - 1) * (bx - (1 - a) * r**2 / (2 * np.log(r)))
        np.testing.assert_allclose(LV_closed(PROF, P2, POWER, x), expected, rtol=1e-12)

    def test_sign_at_large_radius(self):
        x = np.array([np.e**10, 0.0])
        assert LV_closed(PROF, P2, POWER, x) < 0.0

    def test_radial_symmetry(self):
        angles = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        r = 17.3
        vals = np.array([LV_closed(PROF, P2, POWER, r * np.array([np.cos(a), np.sin(a)])) for a in angles])
        assert np.max(np.abs(vals - vals[0])) <= 1e-12 * abs(vals[0])

    def test_domain_error_below_r1(self):
        with pytest.raises(ValueError):
            LV_closed(PROF, P2, POWER, np.array([2.5, 0.0]))

    def test_generic_matches_closed(self):
        rng = np.random.default_rng(2)
        for params in (P2, P3):
            prof = LyapunovProfile.for_params(0.5, params)
            for _ in range(40):
                x = rng.standard_normal(params.d)
                x *= rng.uniform(prof.r1 * 1.01, 1e4) / np.linalg.norm(x)
                lc = LV_closed(prof, params, POWER, x)
                lg = LV_generic(prof, params, POWER, x)
                assert abs(lg - lc) / abs(lc) < 1e-6

    def test_batch_matches_generic(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((50, 2)) * np.exp(rng.uniform(-1, 3, (50, 1)))
        batch = lv_batch(PROF, P2, POWER, X)
        point = np.array([LV_generic(PROF, P2, POWER, x) for x in X])
        scale = np.maximum(np.abs(point), 1.0)
        assert np.max(np.abs(batch - point) / scale) < 1e-6

    def test_zero_drift_negative_outside(self):
        for params in (P2, P3):
            prof = LyapunovProfile.for_params(0.5, params)
            for r in (4.0, 10.0, 100.0):
                x = np.zeros(params.d)
                x[0] = r
                assert LV_closed(prof, params, ZERO_DRIFT, x) < 0.0

    def test_plateau_lv_zero(self):
        assert LV_generic(PROF, P2, POWER, np.array([0.8, 0.5])) == 0.0

    def test_sup_lv_decays_to_minus_infinity(self):
        # sup over |x| > r of LV decreases without bound along the scan grid
        radii = np.geomspace(20.0, 1e6, 30)
        vals = np.array([LV_closed(PROF, P2, POWER, np.array([r, 0.0])) for r in radii])
        assert np.all(np.diff(vals) < 0.0)
        assert vals[-1] < -1e9


class TestNegativityRadius:
    def test_root_against_1d_oracle(self):
        # kappa=1, m=2, eta=1, alpha=1/2, d=2: bracket root solves 4 log r = r
        neg = negativity_radius(PROF, P2, POWER)
        root = brentq(lambda r: 4.0 * np.log(r) - r, 5.0, 20.0)
        assert neg.found and neg.certified and neg.bracket_ok
        assert abs(neg.sign_change - root) / root < 5e-3

    def test_bracket_signs(self):
        neg = negativity_radius(PROF, P2, POWER)
        assert LV_closed(PROF, P2, POWER, np.array([0.9 * neg.r_star, 0.0])) > 0.0
        assert LV_closed(PROF, P2, POWER, np.array([1.1 * neg.r_star, 0.0])) < 0.0

    def test_illegal_params_report_failure(self):
        # m - 1 = 2 eta forced through: noise never dominates
        bad = ModelParams(d=2, m=3.0, eta=1.0)
        neg = negativity_radius(LyapunovProfile.for_params(0.5, bad), bad, POWER)
        assert not neg.found
        assert "no sign change" in neg.message

    def test_kappa_monotonicity(self):
        neg1 = negativity_radius(PROF, P2, POWER)
        p_k2 = ModelParams(d=2, m=2.0, eta=1.0, kappa=2.0, c_growth=2.0)
        neg2 = negativity_radius(LyapunovProfile.for_params(0.5, p_k2), p_k2, POWER)
        assert neg2.r_star > neg1.r_star


class TestSuperLyapunovFit:
    def test_standard_fit(self):
        fit = super_lyapunov_fit(PROF, P2, POWER, gamma=1.5)
        assert fit.c_coef > 0.0
        assert np.isfinite(fit.d0)
        assert fit.audit_passed

    def test_gamma_boundary_rejected(self):
        with pytest.raises(ValueError):
            super_lyapunov_fit(PROF, P2, POWER, gamma=1.0)

    def test_kappa_scaling_still_audits(self):
        p_k2 = ModelParams(d=2, m=2.0, eta=1.0, kappa=2.0, c_growth=2.0)
        prof = LyapunovProfile.for_params(0.5, p_k2)
        fit1 = super_lyapunov_fit(PROF, P2, POWER, gamma=1.5)
        fit2 = super_lyapunov_fit(prof, p_k2, POWER, gamma=1.5)
        assert fit2.audit_passed
        assert fit2.c_coef < fit1.c_coef or fit2.d0 > fit1.d0

    def test_audit_inequality_on_fresh_points(self):
        fit = super_lyapunov_fit(PROF, P2, POWER, gamma=1.5, seed=123)
        rng = np.random.default_rng(4242)
        radii = np.exp(rng.uniform(np.log(1e-2), np.log(1e5), 2000))
        dirs = rng.standard_normal((2000, 2))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = radii[:, None] * dirs
        lv = lv_batch(PROF, P2, POWER, pts)
        bound = -fit.c_coef * V_many(PROF, pts) ** fit.gamma + fit.d0
        assert np.all(lv <= bound + 1e-8 * (1.0 + np.abs(bound)))


class TestKThreshold:
    def test_plugin_example(self):
        fit = SuperLyapunovFit(gamma=2.0, c_coef=1.0, d0=1.0, t_horizon=1.0, k_t=0.0, r_star=0.0, audit_passed=True, n_audit=0)
        assert k_threshold(fit) == 2.0

    def test_second_plugin(self):
        fit = SuperLyapunovFit(gamma=2.0, c_coef=2.0, d0=1.0, t_horizon=1.0, k_t=0.0, r_star=0.0, audit_passed=True, n_audit=0)
        assert k_threshold(fit) == 1.0

    def test_nonincreasing_in_horizon(self):
        values = [
            k_threshold(
                SuperLyapunovFit(gamma=1.5, c_coef=0.3, d0=2.0, t_horizon=T, k_t=0.0, r_star=0.0, audit_passed=True, n_audit=0)
            )
            for T in (0.1, 0.5, 1.0, 5.0, 50.0)
        ]
        assert all(a >= b for a, b in zip(values, values[1:]))
