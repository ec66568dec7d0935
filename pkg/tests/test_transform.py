"""Change of variables: norm law, Jacobian, image drift and its bound."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdelab.coefficients import DriftSpec, ModelParams, sigma_inverse, validate_params
from sdelab.transform import (
    TransformContext,
    dphi,
    g_bound_check,
    phi,
    phi_inv,
    transformed_drift,
    transformed_drift_batch,
)

P2 = ModelParams(d=2, m=2.0, eta=1.0)
POWER = DriftSpec()
CTX = TransformContext(P2, POWER)


class TestPhi:
    def test_example(self):
        np.testing.assert_allclose(phi(P2, np.array([2.0, 0.0])), [0.5, 0.0])

    def test_unit_sphere_fixed(self):
        x = np.array([0.8, -0.6])
        np.testing.assert_allclose(phi(P2, x), x, atol=1e-15)

    def test_norm_law(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10_000, 2)) * np.exp(rng.uniform(-3, 3, (10_000, 1)))
        norms = np.linalg.norm(phi(P2, X), axis=1)
        target = np.linalg.norm(X, axis=1) ** (-P2.eta)
        np.testing.assert_allclose(norms, target, rtol=1e-12)

    def test_undefined_at_zero(self):
        with pytest.raises(ValueError):
            phi(P2, np.zeros(2))
        with pytest.raises(ValueError):
            phi_inv(P2, np.zeros(2))

    def test_roundtrips(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10_000, 2)) * np.exp(rng.uniform(-2, 2, (10_000, 1)))
        np.testing.assert_allclose(phi_inv(P2, phi(P2, X)), X, rtol=1e-10)
        np.testing.assert_allclose(phi(P2, phi_inv(P2, X)), X, rtol=1e-10)

    @given(
        r=st.floats(min_value=1e-3, max_value=1e3),
        angle=st.floats(min_value=0.0, max_value=2 * np.pi),
        eta=st.floats(min_value=0.6, max_value=3.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_norm_law_property(self, r, angle, eta):
        p = ModelParams(d=2, m=1.5, eta=eta)
        x = r * np.array([np.cos(angle), np.sin(angle)])
        assert abs(np.linalg.norm(phi(p, x)) - r ** (-eta)) <= 1e-9 * r ** (-eta)


class TestDphi:
    def test_example(self):
        np.testing.assert_allclose(dphi(P2, np.array([2.0, 0.0])), [[-0.25, 0.0], [0.0, 0.25]])

    def test_equals_sigma_inverse(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.standard_normal(2)
            x *= rng.uniform(1.0, 50.0) / np.linalg.norm(x)
            np.testing.assert_allclose(dphi(P2, x), sigma_inverse(P2, x), atol=1e-15)

    def test_eigenvalues(self):
        r = 3.0
        x = np.array([r, 0.0])
        jac = dphi(P2, x)
        np.testing.assert_allclose(np.diag(jac), [-P2.eta * r ** (-P2.eta - 1.0), r ** (-P2.eta - 1.0)])

    def test_finite_difference_jacobian(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.standard_normal(2)
            x *= rng.uniform(1.5, 30.0) / np.linalg.norm(x)
            h = 1e-6 * np.linalg.norm(x)
            fd = np.empty((2, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = h
                fd[:, k] = (phi(P2, x + e) - phi(P2, x - e)) / (2 * h)
            jac = dphi(P2, x)
            assert np.max(np.abs(fd - jac)) / np.max(np.abs(jac)) < 1e-5


class TestTransformedDrift:
    def test_worked_example(self):
        np.testing.assert_allclose(transformed_drift(CTX, np.array([0.5, 0.0])), [-1.0, 0.0], atol=1e-14)

    def test_truncation_region(self):
        np.testing.assert_allclose(transformed_drift(CTX, np.array([2.0, 0.0])), [0.0, 0.0])

    def test_chain_rule_identity(self):
        # g(phi(x)) = Dphi(x) b(x): the noise becomes additive under the map
        rng = np.random.default_rng(4)
        for _ in range(200):
            x = rng.standard_normal(2)
            x *= rng.uniform(1.01, 20.0) / np.linalg.norm(x)
            lhs = transformed_drift(CTX, phi(P2, x))
            rhs = dphi(P2, x) @ POWER(P2, x)
            assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(np.max(np.abs(rhs)), 1e-30)

    def test_generic_chain_matches_power_closed_form(self):
        generic = DriftSpec(
            kind="custom",
            evaluator=lambda X: np.sqrt(np.sum(X * X, axis=-1, keepdims=True)) * X,
            growth_m=2.0,
            growth_c=1.0,
        )
        ctx_g = TransformContext(P2, generic)
        rng = np.random.default_rng(5)
        Y = rng.standard_normal((100, 2))
        Y *= rng.uniform(0.05, 0.95, (100, 1)) / np.linalg.norm(Y, axis=1, keepdims=True)
        np.testing.assert_allclose(
            transformed_drift_batch(CTX, Y), transformed_drift_batch(ctx_g, Y), rtol=1e-12
        )

    def test_deep_evaluation_stays_finite(self):
        g = transformed_drift(CTX, np.array([1e-120, 0.0]))
        assert np.all(np.isfinite(g))
        np.testing.assert_allclose(np.linalg.norm(g), P2.kappa)

    def test_undefined_at_zero(self):
        with pytest.raises(ValueError):
            transformed_drift(CTX, np.zeros(2))


class TestGBound:
    def test_exponent_m2_eta1(self):
        rep = g_bound_check(CTX)
        assert rep.exponent == 0.0
        assert rep.exponent_gt_minus_1
        np.testing.assert_allclose(rep.c_g, P2.kappa, rtol=1e-9)
        assert abs(rep.slope_loglog) < 1e-6

    def test_exponent_fractional(self):
        p = ModelParams(d=2, m=2.0, eta=0.75)
        rep = g_bound_check(TransformContext(p, POWER))
        np.testing.assert_allclose(rep.exponent, -1.0 / 3.0)
        assert rep.exponent_gt_minus_1
        assert np.isfinite(rep.c_g)
        np.testing.assert_allclose(rep.slope_loglog, rep.exponent, atol=1e-6)

    def test_exponent_matches_validate_params(self):
        # (eta + 1 - m)/eta > -1 is exactly 2 eta > m - 1
        rng = np.random.default_rng(6)
        for _ in range(200):
            m = rng.uniform(1.01, 4.0)
            eta = rng.uniform(0.05, 3.0)
            exponent_ok = (eta + 1.0 - m) / eta > -1.0
            params_ok = validate_params(ModelParams(d=2, m=m, eta=eta)).ok
            assert exponent_ok == params_ok
