"""Coefficient family: closed forms, blend contract, Ito correction, scans."""

import numpy as np
import pytest
from scipy.optimize import brentq

from sdelab.coefficients import (
    DriftSpec,
    ModelParams,
    diffusion_matrix,
    ellipticity_scan,
    ito_drift,
    ito_drift_batch,
    radial_profiles,
    radial_profile_derivs,
    sigma,
    sigma_apply,
    sigma_inverse,
    sigma_matrices,
    strat_correction,
    strat_correction_fd,
    strat_correction_profile,
    validate_params,
)

P2 = ModelParams(d=2, m=2.0, eta=1.0)
P3 = ModelParams(d=3, m=2.0, eta=1.0)
POWER = DriftSpec()


def sample_outer(params, n, seed, lo_fac=1.0 + 1e-9, hi_fac=100.0):
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(np.log(params.r_switch * lo_fac), np.log(params.r_switch * hi_fac), n))
    dirs = rng.standard_normal((n, params.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return radii[:, None] * dirs


class TestValidateParams:
    def test_standard_pair_passes(self):
        assert validate_params(ModelParams(d=2, m=2.0, eta=1.0)).ok

    def test_eta_too_small_is_named(self):
        rep = validate_params(ModelParams(d=2, m=3.0, eta=0.5))
        assert not rep.ok
        assert any("eta" in v for v in rep.violations)

    def test_boundary_eta_rejected(self):
        # strict inequality: eta = (m-1)/2 fails
        rep = validate_params(ModelParams(d=2, m=2.0, eta=0.5))
        assert not rep.ok
        assert any("eta" in v for v in rep.violations)

    def test_every_inequality_reported(self):
        rep = validate_params(ModelParams(d=2, m=0.5, eta=0.1, r_switch=-1.0, lambda_floor=0.0, x_max=0.0, eps_zero=0.0))
        assert len(rep.violations) >= 4


class TestSigma:
    def test_outer_formula_example(self):
        # d=2, eta=1, x=(2,0): 4 (I - 2 e1 e1^T)
        np.testing.assert_allclose(sigma(P2, np.array([2.0, 0.0])), np.array([[-4.0, 0.0], [0.0, 4.0]]))

    def test_unit_sphere_eigenvalues(self):
        x = np.array([np.cos(0.3), np.sin(0.3)])
        s = sigma(P2, x)
        eig = np.linalg.eigvalsh(s)
        np.testing.assert_allclose(sorted(eig), [-1.0, 1.0], atol=1e-14)

    def test_origin_is_isotropic_floor(self):
        np.testing.assert_allclose(sigma(P2, np.zeros(2)), np.sqrt(P2.lambda_floor) * np.eye(2))

    def test_continuity_and_radial_derivative_across_switch(self):
        # blend contract: profiles continuous and C^1 across r = R
        R = P2.r_switch
        f_lo, h_lo = radial_profiles(P2, np.array([R * (1 - 1e-9)]))
        f_hi, h_hi = radial_profiles(P2, np.array([R * (1 + 1e-9)]))
        assert abs(f_lo[0] - f_hi[0]) < 1e-7
        assert abs(h_lo[0] - h_hi[0]) < 1e-7
        h = 1e-6
        for profiles, derivs in ((radial_profiles, radial_profile_derivs),):
            d_lo = (profiles(P2, np.array([R - h]))[0] - profiles(P2, np.array([R - 3 * h]))[0]) / (2 * h)
            d_an = derivs(P2, np.array([R - 2 * h]))[0]
            assert abs(d_lo[0] - d_an[0]) / abs(d_an[0]) < 1e-6
        df_in, _ = radial_profile_derivs(P2, np.array([R * (1 - 1e-12)]))
        df_out, _ = radial_profile_derivs(P2, np.array([R * (1 + 1e-12)]))
        assert abs(df_in[0] - df_out[0]) / abs(df_out[0]) < 1e-6

    def test_sigma_apply_matches_matrices(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((64, 3)) * 2.0
        V = rng.standard_normal((64, 3))
        mats = sigma_matrices(P3, X)
        np.testing.assert_allclose(sigma_apply(P3, X, V), np.einsum("nij,nj->ni", mats, V), atol=1e-12)


class TestSigmaInverse:
    def test_formula_example(self):
        np.testing.assert_allclose(
            sigma_inverse(P2, np.array([2.0, 0.0])), 0.25 * np.array([[-1.0, 0.0], [0.0, 1.0]])
        )

    def test_unit_norm_formula(self):
        x = np.array([0.6, 0.8])
        np.testing.assert_allclose(sigma_inverse(P2, x), np.eye(2) - 2.0 * np.outer(x, x), atol=1e-14)

    def test_product_identity_many_points(self):
        for params in (P2, P3, ModelParams(d=3, m=2.0, eta=2.0)):
            pts = sample_outer(params, 10_000, seed=11)
            mats = sigma_matrices(params, pts)
            rr = np.linalg.norm(pts, axis=1)
            xh = pts / rr[:, None]
            inv = rr[:, None, None] ** (-params.eta - 1.0) * (
                np.eye(params.d)[None] - (params.eta + 1.0) * xh[:, :, None] * xh[:, None, :]
            )
            err = np.max(np.abs(mats @ inv - np.eye(params.d)[None]))
            assert err < 1e-10

    def test_domain_error_inside(self):
        with pytest.raises(ValueError):
            sigma_inverse(P2, np.array([0.3, 0.0]))


class TestDiffusionMatrix:
    def test_isotropic_case_eta_one(self):
        np.testing.assert_allclose(diffusion_matrix(P2, np.array([2.0, 0.0])), 16.0 * np.eye(2), atol=1e-12)

    def test_radial_eigenvalue_eta_two(self):
        p = ModelParams(d=3, m=2.0, eta=2.0)
        r = 1.7
        a = diffusion_matrix(p, np.array([r, 0.0, 0.0]))
        np.testing.assert_allclose(a, r**6 * np.diag([0.25, 1.0, 1.0]), rtol=1e-12)

    def test_product_vs_closed_form(self):
        for params in (P2, P3, ModelParams(d=3, m=2.0, eta=2.0)):
            pts = sample_outer(params, 2000, seed=5)
            mats = sigma_matrices(params, pts)
            prod = mats @ np.swapaxes(mats, 1, 2)
            rr = np.linalg.norm(pts, axis=1)
            xh = pts / rr[:, None]
            closed = rr[:, None, None] ** (2 * params.eta + 2) * (
                np.eye(params.d)[None] + (-1.0 + params.eta**-2) * xh[:, :, None] * xh[:, None, :]
            )
            rel = np.max(np.abs(prod - closed), axis=(1, 2)) / np.max(np.abs(closed), axis=(1, 2))
            assert rel.max() < 1e-9


class TestItoDrift:
    def test_correction_vanishes_d2_eta1(self):
        # coefficient (d - 1 - 1/eta) = 0
        x = np.array([3.0, -1.0])
        np.testing.assert_allclose(ito_drift(P2, POWER, x), POWER(P2, x), atol=1e-14)

    def test_closed_form_d3(self):
        x = np.array([1.0, 2.0, -0.5])
        r = np.linalg.norm(x)
        np.testing.assert_allclose(ito_drift(P3, POWER, x), r * x - r**2 * x, rtol=1e-12)

    def test_fd_oracle_agrees_outer(self):
        pts = sample_outer(P3, 40, seed=3, hi_fac=10.0)
        for x in pts:
            closed = strat_correction(P3, x)
            fd = strat_correction_fd(P3, x)
            assert np.max(np.abs(fd - closed)) / np.max(np.abs(closed)) < 1e-4

    def test_inner_fd_matches_profile_formula(self):
        # independent route: radial profile derivatives give the same correction
        rng = np.random.default_rng(9)
        for _ in range(20):
            x = rng.standard_normal(3)
            x *= rng.uniform(0.05, 0.95) / np.linalg.norm(x)
            fd = strat_correction_fd(P3, x)
            pr = strat_correction_profile(P3, x)
            assert np.max(np.abs(fd - pr)) < 1e-6 * max(1.0, np.max(np.abs(pr)))

    def test_batch_matches_pointwise(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((100, 2)) * 1.5
        batch = ito_drift_batch(P2, POWER, X)
        point = np.array([ito_drift(P2, POWER, x) for x in X])
        assert np.max(np.abs(batch - point)) < 2e-6


class TestEllipticityScan:
    def test_constant_field_gives_lambda(self):
        rep = ellipticity_scan(P3, 2000, seed=0, sigma_fn=lambda x: np.sqrt(P3.lambda_floor) * np.eye(3))
        np.testing.assert_allclose(rep.min_eigenvalue, P3.lambda_floor, rtol=1e-12)
        assert rep.passes

    def test_d2_fails_on_radial_shell(self):
        # the blended radial eigenvalue f + h changes sign on one shell in (R/2, R)
        rep = ellipticity_scan(P2, 50_000, seed=1)
        assert not rep.passes
        root = brentq(
            lambda r: (radial_profiles(P2, np.array([r]))[0] + radial_profiles(P2, np.array([r]))[1])[0],
            P2.r_switch / 2 + 1e-9,
            P2.r_switch - 1e-9,
        )
        assert abs(rep.argmin_radius - root) < 0.01

    def test_d3_shows_the_same_shell(self):
        # the blend profiles do not depend on d, so the degenerate shell exists in
        # every dimension; the scan reports it rather than hiding it
        rep = ellipticity_scan(P3, 50_000, seed=1)
        assert not rep.passes
        assert 0.5 < rep.argmin_radius < 1.0

    def test_requires_at_least_one_sample(self):
        with pytest.raises(ValueError):
            ellipticity_scan(P2, 0)


class TestDriftSpec:
    def test_power_growth_certificate_holds(self):
        assert POWER.spot_check_growth(P2)

    def test_bad_certificate_warns(self):
        bad = DriftSpec(kind="custom", evaluator=lambda x: 10.0 * x, growth_m=2.0, growth_c=0.1)
        with pytest.warns(UserWarning):
            assert not bad.spot_check_growth(P2)

    def test_custom_requires_evaluator(self):
        with pytest.raises(ValueError):
            DriftSpec(kind="custom")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            DriftSpec(kind="linear")
