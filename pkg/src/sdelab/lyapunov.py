"""Logarithmic Lyapunov calculus: V = (log|x|)^alpha outside a ball.

V is extended inside by a C^2 smoothstep blend down to a constant plateau, so
that V, grad V and D^2 V exist everywhere.  The generator LV admits a closed
form on the exact-formula region which a generic matrix assembly must match;
both are provided, together with the radius beyond which LV is negative, the
super-Lyapunov fit LV <= -c V^gamma + d0, and the ball-size threshold K_T
that the mixing argument requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm, qmc

from .coefficients import (
    DriftSpec,
    ModelParams,
    diffusion_matrix,
    ito_drift,
    ito_drift_batch,
    radial_profiles,
)

__all__ = [
    "LyapunovProfile",
    "SuperLyapunovFit",
    "NegativityReport",
    "FitError",
    "V",
    "grad_V",
    "hess_V",
    "LV_closed",
    "LV_generic",
    "lv_batch",
    "negativity_radius",
    "super_lyapunov_fit",
    "k_threshold",
]


class FitError(RuntimeError):
    """Raised when the super-Lyapunov fit cannot produce a positive c."""


@dataclass(frozen=True)
class LyapunovProfile:
    """Blend geometry of V: plateau below r0, exact (log r)^alpha above r1.

    The plateau value a_floor = (1/2)(log r1)^alpha keeps the blend monotone
    in radius, so V >= a_floor everywhere with equality on the plateau.
    """

    alpha: float
    r0: float
    r1: float
    a_floor: float

    @classmethod
    def for_params(cls, alpha: float, params: ModelParams) -> "LyapunovProfile":
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        r0 = max(2.0, params.r_switch)
        r1 = r0 + 1.0
        return cls(alpha=alpha, r0=r0, r1=r1, a_floor=0.5 * np.log(r1) ** alpha)


@dataclass(frozen=True)
class SuperLyapunovFit:
    """Fitted constants of LV <= -c V^gamma + d0 and the derived threshold.

    d0 is the additive constant (the dimension keeps the name d elsewhere).
    """

    gamma: float
    c_coef: float
    d0: float
    t_horizon: float
    k_t: float
    r_star: float
    audit_passed: bool
    n_audit: int


def _smoothstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_d1(u):
    return 30.0 * u * u * (u - 1.0) ** 2


def _smoothstep_d2(u):
    return 60.0 * u * (2.0 * u - 1.0) * (u - 1.0)


def _radial_value(prof: LyapunovProfile, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    v = np.full_like(r, prof.a_floor)
    outer = r >= prof.r1
    v[outer] = np.log(r[outer]) ** prof.alpha
    mid = (r > prof.r0) & ~outer
    if np.any(mid):
        rm = r[mid]
        s = _smoothstep(rm - prof.r0)  # blend width is exactly 1
        v[mid] = prof.a_floor + s * (np.log(rm) ** prof.alpha - prof.a_floor)
    return v


def _radial_derivs(prof: LyapunovProfile, r: np.ndarray):
    """(v, v', v'') of the radial profile of V, vectorized in r."""
    r = np.asarray(r, dtype=float)
    a = prof.alpha
    v = np.full_like(r, prof.a_floor)
    d1 = np.zeros_like(r)
    d2 = np.zeros_like(r)
    outer = r >= prof.r1
    if np.any(outer):
        ro = r[outer]
        lg = np.log(ro)
        v[outer] = lg**a
        d1[outer] = a * lg ** (a - 1.0) / ro
        d2[outer] = a * lg ** (a - 2.0) * ((a - 1.0) - lg) / (ro * ro)
    mid = (r > prof.r0) & ~outer
    if np.any(mid):
        rm = r[mid]
        lg = np.log(rm)
        w = lg**a
        w1 = a * lg ** (a - 1.0) / rm
        w2 = a * lg ** (a - 2.0) * ((a - 1.0) - lg) / (rm * rm)
        u = rm - prof.r0
        s, s1, s2 = _smoothstep(u), _smoothstep_d1(u), _smoothstep_d2(u)
        diff = w - prof.a_floor
        v[mid] = prof.a_floor + s * diff
        d1[mid] = s1 * diff + s * w1
        d2[mid] = s2 * diff + 2.0 * s1 * w1 + s * w2
    return v, d1, d2


def V(prof: LyapunovProfile, x: np.ndarray) -> float:
    """V(x); exact (log|x|)^alpha for |x| >= r1, C^2 blend below."""
    x = np.asarray(x, dtype=float)
    return float(_radial_value(prof, np.atleast_1d(np.linalg.norm(x)))[0])


def V_many(prof: LyapunovProfile, X: np.ndarray) -> np.ndarray:
    """V at each row of X."""
    return _radial_value(prof, np.linalg.norm(np.asarray(X, dtype=float), axis=-1))


def grad_V(prof: LyapunovProfile, x: np.ndarray) -> np.ndarray:
    """Gradient of V; alpha (log|x|)^(alpha-1) |x|^(-2) x on the exact region."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return np.zeros_like(x)
    _, d1, _ = _radial_derivs(prof, np.array([r]))
    return d1[0] * x / r


def hess_V(prof: LyapunovProfile, x: np.ndarray) -> np.ndarray:
    """Hessian of V, assembled from the radial derivatives.

    On the exact region this equals
    alpha (log r)^(alpha-1) r^(-2) (I - (2 + (1-alpha)/log r) xx^T/r^2).
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return np.zeros((d, d))
    _, d1, d2 = _radial_derivs(prof, np.array([r]))
    xhat = x / r
    proj = np.outer(xhat, xhat)
    return d2[0] * proj + (d1[0] / r) * (np.eye(d) - proj)


def LV_closed(prof: LyapunovProfile, params: ModelParams, drift: DriftSpec, x: np.ndarray) -> float:
    """Closed form of the generator on the exact-formula region.

    LV = alpha (log r)^(alpha-1) [ b(x).x / r^2
         - (1/2) r^(2 eta) ((d-2)/eta + (1-alpha)/(eta^2 log r)) ],
    valid for |x| >= max(r1, r_switch).
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    lo = max(prof.r1, params.r_switch)
    if r < lo:
        raise ValueError(f"LV_closed requires |x| >= {lo} (got {r})")
    return float(_lv_closed_batch(prof, params, drift, x[None, :])[0])


def _lv_closed_batch(prof: LyapunovProfile, params: ModelParams, drift: DriftSpec, X: np.ndarray) -> np.ndarray:
    a, eta, d = prof.alpha, params.eta, params.d
    r = np.linalg.norm(X, axis=1)
    lg = np.log(r)
    b = drift(params, X)
    bx = np.einsum("ij,ij->i", b, X) / (r * r)
    bracket = bx - 0.5 * r ** (2.0 * eta) * ((d - 2.0) / eta + (1.0 - a) / (eta * eta * lg))
    return a * lg ** (a - 1.0) * bracket


def LV_generic(prof: LyapunovProfile, params: ModelParams, drift: DriftSpec, x: np.ndarray) -> float:
    """Generator assembled literally: b~ . grad V + (1/2) tr[sigma sigma^T D^2 V].

    Defined everywhere; agrees with LV_closed on the exact-formula region.
    """
    x = np.asarray(x, dtype=float)
    bt = ito_drift(params, drift, x)
    g = grad_V(prof, x)
    H = hess_V(prof, x)
    A = diffusion_matrix(params, x)
    return float(bt @ g + 0.5 * np.trace(A @ H))


def lv_batch(prof: LyapunovProfile, params: ModelParams, drift: DriftSpec, X: np.ndarray) -> np.ndarray:
    """LV at each row of X via the radial structure of sigma sigma^T and D^2 V.

    With a = F I + H P and D^2 V = v'' P + (v'/r)(I - P), the trace reduces to
    F (v'' + (d-1) v'/r) + H v''; the drift term is (b~ . xhat) v'.  Used for
    grids and audits; unit tests pin it against LV_generic.
    """
    X = np.asarray(X, dtype=float)
    r = np.linalg.norm(X, axis=1)
    v, d1, d2 = _radial_derivs(prof, r)
    f, h = radial_profiles(params, r)
    F = f * f
    H = 2.0 * f * h + h * h
    bt = ito_drift_batch(params, drift, X)
    safe_r = np.where(r > 0.0, r, 1.0)
    bx = np.einsum("ij,ij->i", bt, X) / safe_r
    out = bx * d1 + 0.5 * (F * (d2 + (params.d - 1.0) * d1 / safe_r) + H * d2)
    return np.where(r > 0.0, out, 0.0)


def _direction_set(d: int, n: int = 64) -> np.ndarray:
    """Deterministic quasi-random unit directions (Sobol points through the normal map)."""
    eng = qmc.Sobol(d=d, scramble=False)
    u = eng.random_base2(int(np.ceil(np.log2(4 * n + 16))))
    u = u[np.all((u > 1e-9) & (u < 1.0 - 1e-9), axis=1)]
    z = norm.ppf(u)
    norms = np.linalg.norm(z, axis=1)
    z = z[norms > 1e-9][:n]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class NegativityReport:
    """Certified radius beyond which the closed-form LV is negative."""

    r_star: float
    sign_change: float
    bracket_ok: bool
    certified: bool
    grid_max_lv: float
    found: bool
    message: str = ""


def negativity_radius(
    prof: LyapunovProfile,
    params: ModelParams,
    drift: DriftSpec,
    r_cap: float = 1.0e8,
    n_directions: int = 64,
) -> NegativityReport:
    """Locate the smallest radius beyond which LV_closed < 0 on a scan grid.

    Scans log-spaced radii for a sign change of the direction-wise maximum of
    LV_closed, refines it by bisection to 1e-3 relative, then certifies
    negativity on a log grid [r*, 1e6 r*] x n_directions.  Reports failure
    (found=False) when no sign change occurs below r_cap, the signature of a
    parameter set violating 2 eta > m - 1.
    """
    dirs = _direction_set(params.d, n_directions)
    lo = max(prof.r1, params.r_switch) * (1.0 + 1e-9)

    def worst(r: float) -> float:
        return float(np.max(_lv_closed_batch(prof, params, drift, r * dirs)))

    grid = np.geomspace(lo, r_cap, 256)
    vals = np.array([worst(r) for r in grid])
    neg = np.nonzero(vals < 0.0)[0]
    if neg.size == 0:
        return NegativityReport(
            r_star=float("nan"),
            sign_change=float("nan"),
            bracket_ok=False,
            certified=False,
            grid_max_lv=float(vals.max()),
            found=False,
            message=f"no sign change of LV below r_cap={r_cap:g}",
        )
    k = int(neg[0])
    if k == 0:
        # negative already at the smallest admissible radius
        root = grid[0]
    else:
        a, b = grid[k - 1], grid[k]
        while (b - a) / a > 1e-3:
            mid = np.sqrt(a * b)
            if worst(mid) < 0.0:
                b = mid
            else:
                a = mid
        root = b
    r_star = root * (1.0 + 5e-3)
    cert_grid = np.geomspace(r_star, 1e6 * r_star, 512)
    cert_vals = np.array([worst(r) for r in cert_grid])
    certified = bool(np.all(cert_vals < 0.0))
    bracket_ok = bool(worst(0.9 * r_star) > 0.0 > worst(1.1 * r_star)) if k > 0 else True
    return NegativityReport(
        r_star=float(r_star),
        sign_change=float(root),
        bracket_ok=bracket_ok,
        certified=certified,
        grid_max_lv=float(cert_vals.max()),
        found=True,
    )


def super_lyapunov_fit(
    prof: LyapunovProfile,
    params: ModelParams,
    drift: DriftSpec,
    gamma: float,
    t_horizon: float = 1.0,
    n_audit: int = 10_000,
    seed: int = 0,
) -> SuperLyapunovFit:
    """Fit constants c, d0 of the drift condition LV <= -c V^gamma + d0.

    c is half the infimum of -LV/V^gamma over a log grid beyond the negativity
    radius (the halving leaves audit margin against off-grid minima); d0 is the
    supremum of LV + c V^gamma over an inner sample.  A fresh random sample of
    n_audit points must satisfy the inequality for the fit to be accepted.
    """
    if not gamma > 1.0:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    if not t_horizon > 0.0:
        raise ValueError(f"t_horizon must be > 0, got {t_horizon}")
    neg = negativity_radius(prof, params, drift)
    if not neg.found:
        raise FitError(neg.message)
    dirs = _direction_set(params.d, 64)
    lo = max(prof.r1, neg.r_star)
    radii = np.geomspace(lo, 1e6, 512)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, params.d)
    lv = _lv_closed_batch(prof, params, drift, pts)
    vpow = V_many(prof, pts) ** gamma
    ratio = -lv / vpow
    inf_ratio = float(ratio.min())
    if inf_ratio <= 0.0:
        raise FitError("noise fails to dominate the drift: inf(-LV/V^gamma) <= 0")
    c = 0.5 * inf_ratio

    inner_r = np.linspace(0.0, lo * 1.05, 2048)
    inner_pts = (inner_r[:, None, None] * dirs[None, :, :]).reshape(-1, params.d)
    excess = lv_batch(prof, params, drift, inner_pts) + c * V_many(prof, inner_pts) ** gamma
    k_max = int(np.argmax(excess))
    peak_dir = dirs[k_max % len(dirs)]
    peak_r = inner_r[k_max // len(dirs)]

    def neg_excess(r: float) -> float:
        pt = (r * peak_dir)[None, :]
        return -float(lv_batch(prof, params, drift, pt)[0] + c * V_many(prof, pt)[0] ** gamma)

    # polish the radial maximum so fresh audit points cannot beat the grid sup
    bracket_lo = max(0.0, peak_r - 2.0 * (inner_r[1] - inner_r[0]))
    bracket_hi = min(lo * 1.05, peak_r + 2.0 * (inner_r[1] - inner_r[0]))
    res = minimize_scalar(neg_excess, bounds=(bracket_lo, bracket_hi), method="bounded", options={"xatol": 1e-10})
    d0 = max(0.0, float(np.max(excess)), -float(res.fun))

    rng = np.random.default_rng(seed)
    fresh_r = np.exp(rng.uniform(np.log(1e-3), np.log(1e6), n_audit))
    fresh_dirs = rng.standard_normal((n_audit, params.d))
    fresh_dirs /= np.linalg.norm(fresh_dirs, axis=1, keepdims=True)
    fresh = fresh_r[:, None] * fresh_dirs
    lv_fresh = lv_batch(prof, params, drift, fresh)
    bound = -c * V_many(prof, fresh) ** gamma + d0
    audit_passed = bool(np.all(lv_fresh <= bound + 1e-8 * (1.0 + np.abs(bound))))

    fit = SuperLyapunovFit(
        gamma=gamma,
        c_coef=c,
        d0=d0,
        t_horizon=t_horizon,
        k_t=float("nan"),
        r_star=neg.r_star,
        audit_passed=audit_passed,
        n_audit=n_audit,
    )
    return SuperLyapunovFit(**{**fit.__dict__, "k_t": k_threshold(fit)})


def k_threshold(fit: SuperLyapunovFit) -> float:
    """Ball-size threshold K_T = max{(2 d0/c)^(1/gamma), (c (gamma-1) T/2)^(-1/(gamma-1))}."""
    c, g, d0, T = fit.c_coef, fit.gamma, fit.d0, fit.t_horizon
    first = (2.0 * d0 / c) ** (1.0 / g)
    second = (c * (g - 1.0) * T / 2.0) ** (-1.0 / (g - 1.0))
    return float(max(first, second))
