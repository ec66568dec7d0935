"""Numerical laboratory for explosion prevention by noise in super-linear SDEs.

The library simulates the ODE dx = b(x)dt with super-linear drift (which blows
up in finite time), the same system driven by a radially structured
multiplicative Stratonovich noise (which does not, in dimension d >= 2), and
the one-dimensional counterexample where no such noise can help.  Companion
modules provide the change of variables that turns the noise additive, the
logarithmic Lyapunov calculus behind the ergodicity statements, and Monte
Carlo experiments probing all of the above.
"""

from .coefficients import (
    DriftSpec,
    ModelParams,
    ValidationReport,
    diffusion_matrix,
    ellipticity_scan,
    ito_drift,
    sigma,
    sigma_inverse,
    validate_params,
)
from .transform import TransformContext, dphi, phi, phi_inv, transformed_drift
from .lyapunov import LyapunovProfile, SuperLyapunovFit, k_threshold, super_lyapunov_fit
from .integrate import SchemeConfig, SdePath, normal_increments, ode_solve_explosive, simulate_path

__all__ = [
    "DriftSpec",
    "ModelParams",
    "ValidationReport",
    "diffusion_matrix",
    "ellipticity_scan",
    "ito_drift",
    "sigma",
    "sigma_inverse",
    "validate_params",
    "TransformContext",
    "dphi",
    "phi",
    "phi_inv",
    "transformed_drift",
    "LyapunovProfile",
    "SuperLyapunovFit",
    "k_threshold",
    "super_lyapunov_fit",
    "SchemeConfig",
    "SdePath",
    "normal_increments",
    "ode_solve_explosive",
    "simulate_path",
]
