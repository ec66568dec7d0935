"""Acceptance engine: every exit criterion at its stated tolerance.

Each criterion is a function returning a CriterionResult with a JSON-able
details dict; run_all composes them into the report that both the CLI
``all-acceptance`` command and the pytest acceptance module consume.  All
randomness is keyed off the master seed, so the whole report is a pure
function of (config, seed); wall-clock information never enters the
summaries (criterion 13 compares them byte for byte).

Three statistical criteria assert bounds that the model genuinely cannot
meet (the d=2 zero-avoidance theorem concerns the exact origin, a null set,
while any finite detection threshold is reached at logarithmic-in-threshold
rates); those are implemented exactly as stated and are expected to fail.
The details dicts carry the measured values so the failures are auditable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .coefficients import DriftSpec, ModelParams, diffusion_matrix, sigma, sigma_matrices
from .counterexample1d import (
    ScalarModel,
    explosion_criterion,
    explosion_mc_1d,
    feller_integral,
    phi_limit,
)
from .integrate import (
    STATUS_ENTERED_BALL,
    STATUS_EXPLODED,
    STATUS_HIT_ZERO,
    SchemeConfig,
    ode_solve_explosive,
)
from .lyapunov import (
    LyapunovProfile,
    SuperLyapunovFit,
    LV_closed,
    LV_generic,
    V,
    grad_V,
    hess_V,
    k_threshold,
    negativity_radius,
    super_lyapunov_fit,
)
from .montecarlo import (
    EnsembleConfig,
    ergodicity_experiment,
    explosion_probability,
    hitting_time_tauR,
    ito_stratonovich_consistency,
    one_step_weak_drift_check,
    zero_avoidance_y,
)
from .transform import dphi, phi

__all__ = ["CriterionResult", "AcceptanceReport", "run_all", "CRITERIA"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict


@dataclass
class AcceptanceReport:
    criteria: list[CriterionResult] = field(default_factory=list)

    @property
    def n_passed(self) -> int:
        return sum(1 for c in self.criteria if c.passed)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_summary(self) -> dict:
        return {
            "experiment": "all-acceptance",
            "n_passed": self.n_passed,
            "n_criteria": len(self.criteria),
            "criteria": [
                {"number": c.number, "name": c.name, "passed": c.passed, "details": c.details}
                for c in self.criteria
            ],
        }


def _seed(cfg: dict) -> int:
    return int(cfg["scheme"]["seed"])


def _standard_params(d: int = 2, eta: float = 1.0, m: float = 2.0, x_max: float = 1.0e8) -> ModelParams:
    return ModelParams(d=d, m=m, eta=eta, c_growth=1.0, kappa=1.0, r_switch=1.0, lambda_floor=0.25, x_max=x_max, eps_zero=1.0e-4)


def _sample_outer(params: ModelParams, n: int, seed: int, lo: float, hi: float) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    dirs = rng.standard_normal((n, params.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return radii[:, None] * dirs


def criterion_1(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """ODE blow-up oracle: analytic T* = 1, numeric reach of 1e6 in [0.999, 1]."""
    params = _standard_params()
    drift = DriftSpec()
    res = ode_solve_explosive(params, drift, np.array([1.0, 0.0]), x_max=1.0e6)
    if outdir is not None:
        from .cli import write_paths_csv

        write_paths_csv(outdir / "ode_path.csv", res.path)
    ok = res.t_star == 1.0 and res.t_reach is not None and 0.999 <= res.t_reach <= 1.0
    return CriterionResult(
        1,
        "ode_blowup_oracle",
        bool(ok),
        {"t_star": res.t_star, "t_reach": res.t_reach, "window": [0.999, 1.0], "n_steps": res.path.n_steps},
    )


def criterion_2(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Inverse identity sigma . dphi = I to 1e-10 in max norm, three (d, eta) pairs."""
    worst = 0.0
    for d, eta in ((2, 1.0), (3, 1.0), (3, 2.0)):
        params = _standard_params(d=d, eta=eta)
        pts = _sample_outer(params, 10_000, _seed(cfg) + d, params.r_switch * (1 + 1e-9), 100.0 * params.r_switch)
        for x in pts[:: max(1, len(pts) // 2500)]:
            err = float(np.max(np.abs(sigma(params, x) @ dphi(params, x) - np.eye(d))))
            worst = max(worst, err)
        mats = sigma_matrices(params, pts)
        rr = np.linalg.norm(pts, axis=1)
        xh = pts / rr[:, None]
        inv = rr[:, None, None] ** (-eta - 1.0) * (np.eye(d)[None] - (eta + 1.0) * xh[:, :, None] * xh[:, None, :])
        errs = np.max(np.abs(mats @ inv - np.eye(d)[None]), axis=(1, 2))
        worst = max(worst, float(errs.max()))
    return CriterionResult(2, "inverse_identity", bool(worst < 1e-10), {"max_abs_error": worst, "tol": 1e-10})


def criterion_3(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """sigma sigma^T equals its closed form to 1e-9 relative on the outer sample."""
    worst = 0.0
    for d, eta in ((2, 1.0), (3, 1.0), (3, 2.0)):
        params = _standard_params(d=d, eta=eta)
        pts = _sample_outer(params, 10_000, _seed(cfg) + 10 * d, params.r_switch * (1 + 1e-9), 100.0 * params.r_switch)
        mats = sigma_matrices(params, pts)
        prod = mats @ np.swapaxes(mats, 1, 2)
        rr = np.linalg.norm(pts, axis=1)
        xh = pts / rr[:, None]
        closed = rr[:, None, None] ** (2.0 * eta + 2.0) * (
            np.eye(d)[None] + (-1.0 + 1.0 / eta**2) * xh[:, :, None] * xh[:, None, :]
        )
        scale = np.max(np.abs(closed), axis=(1, 2))
        rel = np.max(np.abs(prod - closed), axis=(1, 2)) / scale
        worst = max(worst, float(rel.max()))
        x0 = pts[0]
        lit = float(np.max(np.abs(diffusion_matrix(params, x0) - sigma(params, x0) @ sigma(params, x0).T)))
        worst = max(worst, lit / float(np.max(np.abs(diffusion_matrix(params, x0)))))
    return CriterionResult(3, "diffusion_closed_form", bool(worst < 1e-9), {"max_rel_error": worst, "tol": 1e-9})


def criterion_4(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """grad/hess of V vs central differences (1e-5); LV_generic vs LV_closed (1e-6)."""
    rng = np.random.default_rng(_seed(cfg) + 4)
    worst_g, worst_h, worst_lv = 0.0, 0.0, 0.0
    for d in (2, 3):
        params = _standard_params(d=d)
        drift = DriftSpec()
        prof = LyapunovProfile.for_params(0.5, params)
        radii = np.exp(rng.uniform(np.log(prof.r1 * 1.05), np.log(1.0e4), 1000))
        dirs = rng.standard_normal((1000, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = radii[:, None] * dirs
        for x in pts[::10]:
            r = float(np.linalg.norm(x))
            hg = 1e-5 * max(1.0, r)
            gfd = np.array([(V(prof, x + hg * e) - V(prof, x - hg * e)) / (2 * hg) for e in np.eye(d)])
            g = grad_V(prof, x)
            worst_g = max(worst_g, float(np.max(np.abs(g - gfd)) / np.max(np.abs(g))))
            hh = 1e-4 * max(1.0, r)
            H = hess_V(prof, x)
            Hfd = np.empty((d, d))
            for i in range(d):
                for j in range(d):
                    ei, ej = np.eye(d)[i] * hh, np.eye(d)[j] * hh
                    Hfd[i, j] = (V(prof, x + ei + ej) - V(prof, x + ei - ej) - V(prof, x - ei + ej) + V(prof, x - ei - ej)) / (4 * hh * hh)
            worst_h = max(worst_h, float(np.max(np.abs(H - Hfd)) / np.max(np.abs(H))))
        for x in pts[::5]:
            lc = LV_closed(prof, params, drift, x)
            lg = LV_generic(prof, params, drift, x)
            worst_lv = max(worst_lv, abs(lg - lc) / abs(lc))
    ok = worst_g < 1e-5 and worst_h < 1e-5 and worst_lv < 1e-6
    return CriterionResult(
        4,
        "lyapunov_derivatives",
        bool(ok),
        {"grad_rel": worst_g, "hess_rel": worst_h, "lv_rel": worst_lv, "tols": [1e-5, 1e-5, 1e-6]},
    )


def criterion_5(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Negativity radius certified on [r*, 1e6 r*] x 64 directions for d = 2, 3.

    The d=2 case has an interior sign change whose bracket is verified against
    a 1-d root-finding oracle; for d=3 the closed form is already negative at
    the smallest admissible radius, so no bracket exists there.
    """
    from scipy.optimize import brentq

    details: dict = {}
    ok = True
    for d in (2, 3):
        params = _standard_params(d=d)
        drift = DriftSpec()
        prof = LyapunovProfile.for_params(0.5, params)
        neg = negativity_radius(prof, params, drift)
        entry = {"r_star": neg.r_star, "certified": neg.certified, "bracket_ok": neg.bracket_ok}
        ok = ok and neg.found and neg.certified and neg.bracket_ok
        if d == 2:
            # oracle: with kappa=1, m=2, eta=1, alpha=1/2 the bracket root solves 4 log r = r
            root = brentq(lambda r: 4.0 * np.log(r) - r, 5.0, 20.0)
            entry["oracle_root"] = float(root)
            ok = ok and abs(neg.sign_change - root) / root < 5e-3
        if outdir is not None and d == 2:
            from .cli import write_csv
            from .lyapunov import lv_batch

            radii = np.geomspace(max(prof.r1, params.r_switch) * 1.0001, 1e6, 256)
            e0 = np.zeros(d)
            e0[0] = 1.0
            lv = lv_batch(prof, params, drift, radii[:, None] * e0[None, :])
            write_csv(outdir / "lv_profile.csv", ["r", "lv"], [[rr, vv] for rr, vv in zip(radii, lv)])
        details[f"d{d}"] = entry
    return CriterionResult(5, "lv_negativity", bool(ok), details)


def criterion_6(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Super-Lyapunov fit at gamma = 1.5 with fresh-sample audit; K_T plug-in."""
    params = _standard_params(d=2)
    drift = DriftSpec()
    prof = LyapunovProfile.for_params(0.5, params)
    fit = super_lyapunov_fit(prof, params, drift, gamma=1.5, t_horizon=1.0, seed=_seed(cfg) + 6)
    plug = k_threshold(
        SuperLyapunovFit(gamma=2.0, c_coef=1.0, d0=1.0, t_horizon=1.0, k_t=0.0, r_star=0.0, audit_passed=True, n_audit=0)
    )
    ok = fit.c_coef > 0.0 and np.isfinite(fit.d0) and fit.audit_passed and plug == 2.0
    return CriterionResult(
        6,
        "super_lyapunov_fit",
        bool(ok),
        {"c": fit.c_coef, "d0": fit.d0, "k_t": fit.k_t, "audit_passed": fit.audit_passed, "k_plugin": plug},
    )


def criterion_7(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Scheme consistency: shared-noise refinement tables and one-step weak drift.

    The refinement study runs at three independent master seeds; each seed's
    mean table must end below where it started, with every halving within the
    factor-1.5 monotonicity slack.
    """
    params = _standard_params(d=3)
    drift = DriftSpec()
    tables = {}
    primary_rows = None
    ok = True
    for k in range(3):
        rows, _ = ito_stratonovich_consistency(params, drift, n_paths=64, dt0=1e-3, seed=_seed(cfg) + 7 + k)
        errs = [r.mean_sup_error for r in rows]
        ratios = [errs[j + 1] / errs[j] for j in range(len(errs) - 1)]
        tables[f"seed_offset_{k}"] = {"errors": errs, "ratios": ratios}
        ok = ok and errs[-1] < errs[0] and all(v <= 1.5 for v in ratios)
        if k == 0:
            primary_rows = rows
    if outdir is not None:
        from .cli import write_csv

        write_csv(
            outdir / "refinement.csv",
            ["dt", "mean_sup_error"],
            [[r.dt, r.mean_sup_error] for r in primary_rows],
        )
    weak = {}
    weak_ok = True
    for dt in (1e-3, 1e-4):
        rep = one_step_weak_drift_check(params, drift, np.array([2.0, 0.0, 0.0]), dt, seed=_seed(cfg) + 17)
        weak[f"dt_{dt:g}"] = {"max_abs_z": rep.max_abs_z, "passed": rep.passed}
        weak_ok = weak_ok and rep.passed
    ok = ok and weak_ok
    return CriterionResult(
        7,
        "ito_stratonovich_consistency",
        bool(ok),
        {"tables": tables, "weak_drift": weak},
    )


def criterion_8(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Zero-avoidance pair: d=1 reflection oracle; d=2 full model demands 0 hits.

    The d=2 assertion is the criterion's literal bound.  The continuum
    probability of passing within 1e-4 of the origin is positive (the theorem
    excludes the exact point only), so a faithful simulation reports a small
    positive fraction and this half is expected to fail; the measured value
    is recorded for the audit.
    """
    params1 = _standard_params(d=1)
    drift = DriftSpec()
    scheme = SchemeConfig(scheme="y_euler_additive", dt0=1e-3, t_end=5.0, eps_zero=1e-4, seed=_seed(cfg))
    conf1 = EnsembleConfig(n_paths=2000, x0=(0.5,), scheme=scheme)
    st1 = zero_avoidance_y(params1, drift, conf1, driftless=True)
    oracle = 0.823
    ok1 = abs(st1.hit_zero_fraction - oracle) <= 0.03

    params2 = _standard_params(d=2)
    y0 = phi(params2, np.array([2.0, 0.0]))
    conf2 = EnsembleConfig(n_paths=2000, x0=tuple(y0), scheme=scheme)
    st2 = zero_avoidance_y(params2, drift, conf2)
    ok2 = st2.hit_zero_fraction == 0.0
    if outdir is not None:
        from .cli import write_csv

        write_csv(
            outdir / "fractions.csv",
            ["experiment", "fraction", "ci_lo", "ci_hi", "n"],
            [
                ["zero_avoid_d1_driftless", st1.hit_zero_fraction, *st1.hit_zero_ci, st1.n_paths],
                ["zero_avoid_d2_full", st2.hit_zero_fraction, *st2.hit_zero_ci, st2.n_paths],
            ],
        )
    return CriterionResult(
        8,
        "zero_avoidance_pair",
        bool(ok1 and ok2),
        {
            "d1_fraction": st1.hit_zero_fraction,
            "d1_oracle": oracle,
            "d1_tol": 0.03,
            "d1_ok": bool(ok1),
            "d2_fraction": st2.hit_zero_fraction,
            "d2_required": 0.0,
            "d2_ok": bool(ok2),
            "d2_min_radius": st2.min_radius_overall,
        },
    )


def criterion_9(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Explosion fractions: noisy run must stay <= 0.01; noise-off control = 1.

    The noisy half runs tamed Euler exactly as stated.  In d=2 the image walk
    revisits the origin's neighbourhood every shell excursion and reaches the
    1e8 detection radius at a logarithmic rate, so the measured fraction sits
    far above 0.01 (a faithful chart-switching run of the same event measures
    about one half); the control and its per-path times are exact.
    """
    params = _standard_params(d=2)
    drift = DriftSpec()
    scheme = SchemeConfig(scheme="tamed_euler_ito", dt0=1e-3, t_end=5.0, x_max=1e8, seed=_seed(cfg) + 9)
    conf = EnsembleConfig(n_paths=500, x0=(1.0, 0.0), scheme=scheme)
    noisy = explosion_probability(params, drift, conf)
    ok_noisy = noisy.explosion_fraction <= 0.01

    control = explosion_probability(params, drift, EnsembleConfig(n_paths=500, x0=(1.0, 0.0), scheme=scheme, noise_off=True))
    t_star = 1.0
    times_ok = control.explosion_times.size > 0 and bool(np.all(np.abs(control.explosion_times - t_star) <= 1e-3))
    ok_control = control.explosion_fraction == 1.0 and times_ok
    if outdir is not None:
        from .cli import write_csv

        write_csv(
            outdir / "explosion_fractions.csv",
            ["experiment", "fraction", "ci_lo", "ci_hi", "n"],
            [
                ["noisy_tamed_euler", noisy.explosion_fraction, *noisy.explosion_ci, noisy.n_paths],
                ["noise_off", control.explosion_fraction, *control.explosion_ci, control.n_paths],
            ],
        )
    return CriterionResult(
        9,
        "non_explosion_vs_explosion",
        bool(ok_noisy and ok_control),
        {
            "noisy_fraction": noisy.explosion_fraction,
            "noisy_ci95": list(noisy.explosion_ci),
            "noisy_bound": 0.01,
            "noisy_ok": bool(ok_noisy),
            "floor_hit_paths": noisy.floor_hit_paths,
            "control_fraction": control.explosion_fraction,
            "control_max_time_error": float(np.max(np.abs(control.explosion_times - t_star))) if control.explosion_times.size else None,
            "control_ok": bool(ok_control),
        },
    )


def criterion_10(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Returning property: decided paths must all enter B_R before exploding.

    Implemented as stated.  The image-chart geometry makes the first passage
    to the 1e8 flag radius beat the shell entry for a logarithmic fraction of
    paths (about one in six at these parameters, drift tilt included), so a
    faithful run cannot produce zero explosion-first paths; measured values
    are recorded.
    """
    params = _standard_params(d=2)
    drift = DriftSpec()
    scheme = SchemeConfig(
        scheme="tamed_euler_ito", dt0=1e-3, t_end=5.0, x_max=1e8, seed=_seed(cfg) + 10, watch_radius=params.r_switch
    )
    conf = EnsembleConfig(n_paths=500, x0=(3.0, 0.0), scheme=scheme)
    stats = hitting_time_tauR(params, drift, conf)
    n_entered = stats.status_counts.get("entered_ball", 0)
    n_exploded = stats.status_counts.get("exploded", 0)
    decided = n_entered + n_exploded
    ok = decided > 0 and n_exploded == 0
    if outdir is not None:
        from .cli import write_csv

        write_csv(
            outdir / "tau_r_fractions.csv",
            ["experiment", "fraction", "ci_lo", "ci_hi", "n"],
            [
                ["entered", stats.entered_fraction, *stats.entered_ci, stats.n_paths],
                ["exploded", stats.explosion_fraction, *stats.explosion_ci, stats.n_paths],
            ],
        )
    return CriterionResult(
        10,
        "hitting_before_exploding",
        bool(ok),
        {
            "n_entered": n_entered,
            "n_exploded_first": n_exploded,
            "n_decided": decided,
            "entry_time_quantiles": stats.entry_time_quantiles,
        },
    )


def criterion_11(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """1-d counterexample: quadratures, Monte Carlo vs inverse-Gaussian, Feller."""
    from .cli import inverse_gaussian_cdf

    model = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0 + z * z, x0=0.0)
    crit = explosion_criterion(model)
    lim = phi_limit(model)
    half_pi = float(np.pi / 2.0)
    ok_quad = crit.finite and lim.finite and abs(crit.value - half_pi) < 1e-8 and abs(lim.value - half_pi) < 1e-8

    mc = explosion_mc_1d(
        model, n_paths=2000, dt=1e-3, checkpoints=(0.5, 1.0, 2.0, 5.0, 10.0), seed=_seed(cfg) + 11
    )
    level = lim.value - 1e-8
    oracle_10 = inverse_gaussian_cdf(10.0, level, 1.0)
    oracle_05 = inverse_gaussian_cdf(0.5, level, 1.0)
    frac_10 = mc.fractions[-1]
    frac_05 = mc.fractions[0]
    ok_mc = oracle_10 >= 0.999 and frac_10 >= 0.99 and abs(frac_05 - oracle_05) <= 0.03
    monotone = bool(np.all(np.diff(mc.fractions) >= 0.0))

    feller_model = ScalarModel(b=lambda z: 1.0 + z * z, sigma=lambda z: 1.0, x0=0.0)
    rep = feller_integral(feller_model)
    ok_feller = (
        rep.double_integral.finite
        and rep.comparison.finite
        and rep.double_integral.value <= half_pi + 1e-6
        and rep.inequality_ok is True
    )
    if outdir is not None:
        from .cli import write_csv

        rows = [
            [t, f, inverse_gaussian_cdf(t, level, 1.0)]
            for t, f in zip(mc.checkpoints, mc.fractions)
        ]
        write_csv(outdir / "cdf1d.csv", ["t", "mc_fraction", "oracle_cdf"], rows)
    ok = ok_quad and ok_mc and monotone and ok_feller
    return CriterionResult(
        11,
        "counterexample_1d",
        bool(ok),
        {
            "integral_one_over_b": crit.value,
            "phi_limit": lim.value,
            "target": half_pi,
            "quad_tol": 1e-8,
            "mc_fraction_T10": frac_10,
            "oracle_T10": oracle_10,
            "mc_fraction_T05": frac_05,
            "oracle_T05": oracle_05,
            "monotone_checkpoints": monotone,
            "feller_double_integral": rep.double_integral.value,
            "feller_comparison": rep.comparison.value,
            "feller_inequality_ok": rep.inequality_ok,
        },
    )


def criterion_12(cfg: dict, outdir: Optional[Path]) -> CriterionResult:
    """Ergodicity probe: d1 nonincreasing within the floor, final tv < 0.1.

    Statistical criterion; a failure at N=2000 triggers the prescribed rerun
    at N=8000 before a verdict.  Runs in the chart-switching scheme with the
    explosion flag pushed out to 1e120 so that essentially no paths are lost
    to the flag during the 8-unit horizon.
    """
    params = _standard_params(d=2, x_max=1e120)
    drift = DriftSpec()
    prof = LyapunovProfile.for_params(0.5, params)

    def run(n_paths: int) -> dict:
        # dt0 is free in this criterion and the compared laws are insensitive to
        # it (checked at 1e-3 vs 4e-3); 12 bins per axis keep the multinomial
        # noise of two independent 2000-path laws below the 0.1 tv bound
        scheme = SchemeConfig(scheme="tamed_euler_hybrid", dt0=4e-3, t_end=8.0, x_max=1e120, seed=_seed(cfg) + 12)
        conf = EnsembleConfig(
            n_paths=n_paths,
            x0=(5.0, 0.0),
            x0_b=(0.1, 0.0),
            checkpoints=(1.0, 2.0, 4.0, 8.0),
            bins_per_axis=12,
            scheme=scheme,
        )
        res = ergodicity_experiment(params, drift, conf, prof)
        return {
            "n_paths": n_paths,
            "times": list(res.times),
            "tv": list(res.tv),
            "d1": list(res.d1),
            "noise_floor": list(res.noise_floor),
            "rate": res.rate if np.isfinite(res.rate) else None,
            "rate_reliable": res.reliable,
            "final_tv": res.final_tv,
            "nonincreasing_within_floor": res.nonincreasing_within_floor,
        }

    first = run(2000)
    passed = first["final_tv"] < 0.1 and first["nonincreasing_within_floor"]
    details = {"first": first, "rerun": None}
    if not passed:
        rerun = run(8000)
        details["rerun"] = rerun
        passed = rerun["final_tv"] < 0.1 and rerun["nonincreasing_within_floor"]
        chosen = rerun
    else:
        chosen = first
    if outdir is not None:
        from .cli import write_csv

        write_csv(
            outdir / "decay.csv",
            ["t", "tv", "d1", "noise_floor"],
            [[t, tv, d1, fl] for t, tv, d1, fl in zip(chosen["times"], chosen["tv"], chosen["d1"], chosen["noise_floor"])],
        )
    return CriterionResult(12, "ergodicity_probe", bool(passed), details)


def _criteria_7_to_12(cfg: dict, outdir: Optional[Path]) -> list[CriterionResult]:
    return [fn(cfg, outdir) for fn in (criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12)]


def criterion_13(cfg: dict, outdir: Optional[Path], first_pass: Optional[list[CriterionResult]] = None) -> CriterionResult:
    """Determinism: repeating criteria 7-12 reproduces their summaries byte for byte."""
    first = first_pass if first_pass is not None else _criteria_7_to_12(cfg, None)
    second = _criteria_7_to_12(cfg, None)

    def canon(results: list[CriterionResult]) -> bytes:
        payload = [{"number": r.number, "passed": r.passed, "details": r.details} for r in results]
        return json.dumps(payload, sort_keys=True).encode()

    b1, b2 = canon(first), canon(second)
    identical = b1 == b2
    return CriterionResult(
        13,
        "determinism",
        bool(identical),
        {"byte_identical": bool(identical), "bytes": len(b1), "criteria_compared": [r.number for r in first]},
    )


CRITERIA: tuple[Callable[[dict, Optional[Path]], CriterionResult], ...] = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
)


def run_all(cfg: dict, outdir: Optional[Path] = None) -> AcceptanceReport:
    """Run criteria 1-13 in order and collect the report.

    Criterion 13 reuses the first pass of 7-12 and repeats them once, so the
    whole report costs roughly two passes of the Monte Carlo block.
    """
    report = AcceptanceReport()
    for fn in CRITERIA[:6]:
        report.criteria.append(fn(cfg, outdir))
    first_block = _criteria_7_to_12(cfg, outdir)
    report.criteria.extend(first_block)
    report.criteria.append(criterion_13(cfg, outdir, first_pass=first_block))
    return report
