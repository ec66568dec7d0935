"""Command-line entry point: strict config, experiments, bit-stable artifacts.

Every command writes ``summary.json`` (machine-readable results where each
numeric carries its tolerance or confidence interval) plus per-experiment CSV
files into the output directory; timestamps and environment notes go to a
separate ``metadata.json`` so identical config and seed reproduce summary.json
byte for byte.  Exit codes: 0 success, 2 configuration/validation failure,
3 experiment-level assertion failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime
import json
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import acceptance
from .coefficients import DriftSpec, ModelParams, ellipticity_scan, validate_params
from .counterexample1d import (
    ScalarModel,
    explosion_criterion,
    explosion_mc_1d,
    feller_integral,
    ode_blowup_time_1d,
    phi_limit,
    positivity_audit,
)
from .integrate import SchemeConfig, ode_solve_explosive, simulate_path
from .lyapunov import LyapunovProfile, lv_batch, negativity_radius, super_lyapunov_fit
from .montecarlo import (
    EnsembleConfig,
    ergodicity_experiment,
    explosion_probability,
    hitting_time_tauR,
    ito_stratonovich_consistency,
    one_step_weak_drift_check,
    zero_avoidance_y,
)
from .transform import TransformContext, g_bound_check, phi

__all__ = ["main", "load_config", "ConfigError", "DEFAULT_CONFIG"]


class ConfigError(ValueError):
    """Unknown key, bad type, or failed model validation in the run config."""


DEFAULT_CONFIG: dict[str, Any] = {
    "model": {
        "d": 2,
        "m": 2.0,
        "eta": 1.0,
        "c_growth": 1.0,
        "kappa": 1.0,
        "r_switch": 1.0,
        "lambda_floor": 0.25,
        "x_max": 1.0e8,
        "eps_zero": 1.0e-4,
    },
    "drift": {"kind": "power"},
    "scheme": {
        "scheme": "tamed_euler_hybrid",
        "dt0": 1.0e-3,
        "t_end": 5.0,
        "adaptive": True,
        "seed": 20240601,
    },
    "ensemble": {
        "n_paths": 500,
        "x0": [1.0, 0.0],
        "x0_b": [0.1, 0.0],
        "checkpoints": [1.0, 2.0, 4.0, 8.0],
        "bins_per_axis": 32,
        "compression_scale": 10.0,
    },
    "lyapunov": {"alpha": 0.5, "gamma": 1.5, "t_horizon": 1.0},
    "counterexample": {
        "kind": "quadratic",
        "x0": 0.0,
        "n_paths": 2000,
        "dt0": 1.0e-3,
        "checkpoints": [0.5, 1.0, 2.0, 5.0, 10.0],
    },
    "output": {"dir": "out"},
}

COMMANDS = (
    "validate",
    "ode-blowup",
    "simulate",
    "explode-prob",
    "zero-avoid",
    "tau-r",
    "lyapunov-scan",
    "superlyap-fit",
    "ito-strat-check",
    "ergodicity",
    "counterexample-1d",
    "all-acceptance",
)


def _check_keys(user: Any, default: Any, prefix: str = "") -> None:
    if isinstance(default, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"config section {prefix or '<root>'} must be a mapping")
        for key, val in user.items():
            path = f"{prefix}.{key}" if prefix else key
            if key not in default:
                raise ConfigError(f"unknown config key: {path}")
            _check_keys(val, default[key], path)


def _merge(base: dict, user: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in user.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _apply_override(cfg: dict, spec: str) -> None:
    if "=" not in spec:
        raise ConfigError(f"--set expects key=value, got {spec!r}")
    key, raw = spec.split("=", 1)
    value = yaml.safe_load(raw)
    node = cfg
    parts = key.split(".")
    probe = DEFAULT_CONFIG
    for part in parts[:-1]:
        if not isinstance(probe, dict) or part not in probe:
            raise ConfigError(f"unknown config key: {key}")
        probe = probe[part]
        node = node.setdefault(part, {})
    if not isinstance(probe, dict) or parts[-1] not in probe:
        raise ConfigError(f"unknown config key: {key}")
    node[parts[-1]] = value


def load_config(path: Optional[str], overrides: tuple[str, ...] = (), seed: Optional[int] = None) -> dict:
    """Read, validate and merge the YAML config with CLI overrides."""
    user: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            user = yaml.safe_load(fh) or {}
    _check_keys(user, DEFAULT_CONFIG)
    cfg = _merge(DEFAULT_CONFIG, user)
    for spec in overrides:
        _apply_override(cfg, spec)
    if seed is not None:
        cfg["scheme"]["seed"] = int(seed)
    return cfg


def build_params(cfg: dict) -> ModelParams:
    m = cfg["model"]
    return ModelParams(
        d=int(m["d"]),
        m=float(m["m"]),
        eta=float(m["eta"]),
        c_growth=float(m["c_growth"]),
        kappa=float(m["kappa"]),
        r_switch=float(m["r_switch"]),
        lambda_floor=float(m["lambda_floor"]),
        x_max=float(m["x_max"]),
        eps_zero=float(m["eps_zero"]),
    )


def build_drift(cfg: dict) -> DriftSpec:
    kind = cfg["drift"]["kind"]
    if kind != "power":
        raise ConfigError(f"only the built-in power drift is configurable; got {kind!r}")
    return DriftSpec(kind="power")


def build_scheme(cfg: dict, **overrides: Any) -> SchemeConfig:
    s = dict(cfg["scheme"])
    s.update(overrides)
    return SchemeConfig(
        scheme=str(s["scheme"]),
        dt0=float(s["dt0"]),
        t_end=float(s["t_end"]),
        adaptive=bool(s["adaptive"]),
        seed=int(s["seed"]),
        x_max=s.get("x_max"),
        eps_zero=s.get("eps_zero"),
        watch_radius=s.get("watch_radius"),
    )


def build_ensemble(cfg: dict, scheme: SchemeConfig, **overrides: Any) -> EnsembleConfig:
    e = dict(cfg["ensemble"])
    e.update(overrides)
    cps = tuple(float(c) for c in e["checkpoints"] if c <= scheme.t_end + 1e-12)
    return EnsembleConfig(
        n_paths=int(e["n_paths"]),
        x0=tuple(float(v) for v in e["x0"]),
        x0_b=tuple(float(v) for v in e["x0_b"]) if e.get("x0_b") is not None else None,
        checkpoints=cps,
        bins_per_axis=int(e["bins_per_axis"]),
        compression_scale=float(e["compression_scale"]),
        noise_off=bool(e.get("noise_off", False)),
        scheme=scheme,
    )


def build_scalar_model(cfg: dict) -> ScalarModel:
    c = cfg["counterexample"]
    kind = c["kind"]
    if kind == "quadratic":
        b = sig = lambda z: 1.0 + z * z
    elif kind == "quadratic_b_unit_sigma":
        b, sig = (lambda z: 1.0 + z * z), (lambda z: 1.0)
    else:
        raise ConfigError(f"unknown counterexample kind {kind!r}")
    return ScalarModel(b=b, sigma=sig, x0=float(c["x0"]))


def qty(value: float, **annot: Any) -> dict:
    """A summary numeric with its uncertainty annotation attached."""
    out: dict[str, Any] = {"value": None if value is None or not np.isfinite(value) else float(value)}
    for key, val in annot.items():
        if isinstance(val, (tuple, list, np.ndarray)):
            out[key] = [float(v) for v in val]
        elif val is None or isinstance(val, (bool, str, int)):
            out[key] = val
        else:
            out[key] = float(val)
    return out


def write_summary(outdir: Path, summary: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    meta = {
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "numpy": np.__version__,
        "python": sys.version.split()[0],
    }
    with open(outdir / "metadata.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_paths_csv(path: Path, sde_path) -> None:
    d = sde_path.states.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(d)] + ["path_id"]
    rows = [[t] + list(state) + [sde_path.path_id] for t, state in zip(sde_path.times, sde_path.states)]
    write_csv(path, header, rows)


def _norm_cdf(x: float) -> float:
    from scipy.stats import norm

    return float(norm.cdf(x))


def inverse_gaussian_cdf(t: float, level: float, nu: float) -> float:
    """First-passage law of Brownian motion with drift nu to the level a > 0."""
    if t <= 0.0:
        return 0.0
    rt = np.sqrt(t)
    return _norm_cdf((nu * t - level) / rt) + np.exp(2.0 * nu * level) * _norm_cdf(-(nu * t + level) / rt)


def cmd_validate(cfg: dict, outdir: Path) -> int:
    report = validate_params(build_params(cfg))
    summary = {"experiment": "validate", "ok": report.ok, "violations": list(report.violations)}
    write_summary(outdir, summary)
    if not report.ok:
        for v in report.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2
    print("parameters satisfy every model inequality")
    return 0


def cmd_ode_blowup(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    x0 = np.asarray(cfg["ensemble"]["x0"], dtype=float)
    res = ode_solve_explosive(params, drift, x0, x_max=1.0e6)
    write_paths_csv(outdir / "ode_path.csv", res.path)
    summary = {
        "experiment": "ode-blowup",
        "t_star_analytic": qty(res.t_star, tol=0.0, note="closed form |x0|^(1-m)/(kappa (m-1))"),
        "t_reach": qty(res.t_reach, tol=1e-8, note="error-controlled event time at |x| = 1e6"),
        "status": res.path.status,
        "n_steps": res.path.n_steps,
    }
    write_summary(outdir, summary)
    ok = res.t_reach is not None and (res.t_star is None or res.t_star - 1e-3 <= res.t_reach <= res.t_star)
    print(f"blow-up reach time {res.t_reach} (analytic {res.t_star})")
    return 0 if ok else 3


def cmd_simulate(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg)
    if scheme.scheme == "tamed_euler_hybrid":
        # the single-path reference runner exposes the pure schemes only
        scheme = build_scheme(cfg, scheme="tamed_euler_ito")
    x0 = np.asarray(cfg["ensemble"]["x0"], dtype=float)
    path = simulate_path(params, drift, scheme, x0, path_id=0)
    write_paths_csv(outdir / "paths.csv", path)
    summary = {
        "experiment": "simulate",
        "scheme": scheme.scheme,
        "status": path.status,
        "t_event": qty(path.t_event if path.t_event is not None else float("nan"), tol=scheme.dt0),
        "min_radius": qty(path.min_radius, tol=scheme.dt0),
        "n_steps": path.n_steps,
        "floor_hits": path.floor_hits,
    }
    write_summary(outdir, summary)
    print(f"path finished with status {path.status} after {path.n_steps} steps")
    return 0


def cmd_explode_prob(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg)
    config = build_ensemble(cfg, scheme)
    stats = explosion_probability(params, drift, config)
    control = explosion_probability(params, drift, build_ensemble(cfg, scheme, noise_off=True))
    rows = [
        ["noisy", stats.explosion_fraction, stats.explosion_ci[0], stats.explosion_ci[1], stats.n_paths],
        ["noise_off", control.explosion_fraction, control.explosion_ci[0], control.explosion_ci[1], control.n_paths],
    ]
    write_csv(outdir / "fractions.csv", ["experiment", "fraction", "ci_lo", "ci_hi", "n"], rows)
    summary = {
        "experiment": "explode-prob",
        "explosion_fraction": qty(stats.explosion_fraction, ci95=stats.explosion_ci),
        "status_counts": stats.status_counts,
        "floor_hit_paths": stats.floor_hit_paths,
        "noise_off_fraction": qty(control.explosion_fraction, ci95=control.explosion_ci),
        "noise_off_time_error": qty(
            float(np.max(np.abs(control.explosion_times - (control.explosion_times[0] if control.explosion_times.size else 0.0))))
            if control.explosion_times.size
            else float("nan"),
            tol=1e-3,
        ),
    }
    write_summary(outdir, summary)
    print(f"explosion fraction {stats.explosion_fraction} (noise off: {control.explosion_fraction})")
    return 0


def cmd_zero_avoid(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg, scheme="y_euler_additive")
    x0 = np.asarray(cfg["ensemble"]["x0"], dtype=float)
    y0 = phi(params, x0)
    config = build_ensemble(cfg, scheme, x0=list(y0))
    stats = zero_avoidance_y(params, drift, config)
    contrast = zero_avoidance_y(params, drift, config, driftless=True)
    rows = [
        ["full_model", stats.hit_zero_fraction, stats.hit_zero_ci[0], stats.hit_zero_ci[1], stats.n_paths],
        ["driftless", contrast.hit_zero_fraction, contrast.hit_zero_ci[0], contrast.hit_zero_ci[1], contrast.n_paths],
    ]
    write_csv(outdir / "fractions.csv", ["experiment", "fraction", "ci_lo", "ci_hi", "n"], rows)
    summary = {
        "experiment": "zero-avoid",
        "hit_zero_fraction": qty(stats.hit_zero_fraction, ci95=stats.hit_zero_ci),
        "driftless_fraction": qty(contrast.hit_zero_fraction, ci95=contrast.hit_zero_ci),
        "min_radius": qty(stats.min_radius_overall, tol=params.eps_zero),
        "min_radius_quantiles": {k: qty(v, tol=params.eps_zero) for k, v in stats.min_radius_quantiles.items()},
        "status_counts": stats.status_counts,
    }
    write_summary(outdir, summary)
    print(f"zero-hit fraction {stats.hit_zero_fraction} (driftless contrast {contrast.hit_zero_fraction})")
    return 0


def cmd_tau_r(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg, watch_radius=params.r_switch)
    x0 = list(np.asarray(cfg["ensemble"]["x0"], dtype=float))
    if float(np.linalg.norm(x0)) <= params.r_switch + 1.0:
        direction = np.zeros(params.d)
        direction[0] = 1.0
        x0 = list((params.r_switch + 2.0) * direction)
    config = build_ensemble(cfg, scheme, x0=x0)
    stats = hitting_time_tauR(params, drift, config)
    decided = stats.status_counts.get("entered_ball", 0) + stats.status_counts.get("exploded", 0)
    frac_entered_first = stats.status_counts.get("entered_ball", 0) / decided if decided else float("nan")
    rows = [["entered", stats.entered_fraction, stats.entered_ci[0], stats.entered_ci[1], stats.n_paths],
            ["exploded", stats.explosion_fraction, stats.explosion_ci[0], stats.explosion_ci[1], stats.n_paths]]
    write_csv(outdir / "fractions.csv", ["experiment", "fraction", "ci_lo", "ci_hi", "n"], rows)
    summary = {
        "experiment": "tau-r",
        "entered_fraction": qty(stats.entered_fraction, ci95=stats.entered_ci),
        "exploded_fraction": qty(stats.explosion_fraction, ci95=stats.explosion_ci),
        "entered_before_exploded_fraction": qty(frac_entered_first, n_decided=decided),
        "entry_time_quantiles": {k: qty(v, tol=scheme.dt0) for k, v in stats.entry_time_quantiles.items()},
        "status_counts": stats.status_counts,
    }
    write_summary(outdir, summary)
    print(f"entered-before-exploded fraction {frac_entered_first} over {decided} decided paths")
    return 0


def cmd_lyapunov_scan(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    prof = LyapunovProfile.for_params(float(cfg["lyapunov"]["alpha"]), params)
    neg = negativity_radius(prof, params, drift)
    radii = np.geomspace(max(prof.r1, params.r_switch) * 1.0001, 1e6, 256)
    e0 = np.zeros(params.d)
    e0[0] = 1.0
    lv = lv_batch(prof, params, drift, radii[:, None] * e0[None, :])
    write_csv(outdir / "lv_profile.csv", ["r", "lv"], [[r, v] for r, v in zip(radii, lv)])
    ell = ellipticity_scan(params, 100_000, seed=build_scheme(cfg).seed)
    gb = g_bound_check(TransformContext(params, drift))
    summary = {
        "experiment": "lyapunov-scan",
        "negativity_radius": qty(neg.r_star, tol=1e-3 * neg.r_star if neg.found else None, found=neg.found),
        "negativity_certified": neg.certified,
        "bracket_ok": neg.bracket_ok,
        "ellipticity_min_eig": qty(ell.min_eigenvalue, target=params.lambda_floor),
        "ellipticity_passes": ell.passes,
        "ellipticity_argmin_radius": qty(ell.argmin_radius, tol=params.r_switch / 512),
        "g_bound_c": qty(gb.c_g, exponent=gb.exponent),
        "g_exponent_gt_minus_1": gb.exponent_gt_minus_1,
    }
    write_summary(outdir, summary)
    print(f"LV negative beyond r* = {neg.r_star} (certified: {neg.certified}); ellipticity min eig {ell.min_eigenvalue:.3g}")
    return 0 if neg.found else 3


def cmd_superlyap_fit(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    ly = cfg["lyapunov"]
    prof = LyapunovProfile.for_params(float(ly["alpha"]), params)
    fit = super_lyapunov_fit(prof, params, drift, gamma=float(ly["gamma"]), t_horizon=float(ly["t_horizon"]))
    summary = {
        "experiment": "superlyap-fit",
        "gamma": fit.gamma,
        "c_coef": qty(fit.c_coef, note="half the grid infimum of -LV/V^gamma"),
        "d0": qty(fit.d0, note="sup of LV + c V^gamma over the inner sample"),
        "k_threshold": qty(fit.k_t, tol=0.0),
        "r_star": qty(fit.r_star, tol=1e-3 * fit.r_star),
        "audit_passed": fit.audit_passed,
        "n_audit": fit.n_audit,
    }
    write_summary(outdir, summary)
    print(f"super-Lyapunov fit: c={fit.c_coef:.4g}, d0={fit.d0:.4g}, K_T={fit.k_t:.4g}, audit={'ok' if fit.audit_passed else 'FAILED'}")
    return 0 if fit.audit_passed else 3


def cmd_ito_strat_check(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg)
    rows, sup_err = ito_stratonovich_consistency(params, drift, dt0=scheme.dt0, seed=scheme.seed)
    write_csv(outdir / "refinement.csv", ["dt", "mean_sup_error"], [[r.dt, r.mean_sup_error] for r in rows])
    x_probe = np.zeros(params.d)
    x_probe[0] = 2.0
    weak = one_step_weak_drift_check(params, drift, x_probe, scheme.dt0, seed=scheme.seed)
    errs = [r.mean_sup_error for r in rows]
    ratios = [errs[j + 1] / errs[j] for j in range(len(rows) - 1)]
    summary = {
        "experiment": "ito-strat-check",
        "refinement": [{"dt": qty(r.dt, tol=0.0), "mean_sup_error": qty(r.mean_sup_error, stderr=float(sup_err[j].std(ddof=1) / np.sqrt(sup_err.shape[1])))} for j, r in enumerate(rows)],
        "halving_ratios": [qty(v, bound=1.5) for v in ratios],
        "finest_below_coarsest": bool(errs[-1] < errs[0]),
        "weak_drift_max_z": qty(weak.max_abs_z, bound=3.0),
        "weak_drift_passed": weak.passed,
    }
    write_summary(outdir, summary)
    ok = all(v <= 1.5 for v in ratios) and weak.passed and errs[-1] < errs[0]
    print(f"refinement table: {[(r.dt, round(r.mean_sup_error, 6)) for r in rows]}; weak-drift max |z| = {weak.max_abs_z:.2f}")
    return 0 if ok else 3


def cmd_ergodicity(cfg: dict, outdir: Path) -> int:
    params, drift = build_params(cfg), build_drift(cfg)
    scheme = build_scheme(cfg, t_end=max(cfg["ensemble"]["checkpoints"]), x_max=1e120)
    config = build_ensemble(cfg, scheme)
    prof = LyapunovProfile.for_params(float(cfg["lyapunov"]["alpha"]), params)
    res = ergodicity_experiment(params, drift, config, prof)
    write_csv(
        outdir / "decay.csv",
        ["t", "tv", "d1", "noise_floor"],
        [[t, tv, d1, fl] for t, tv, d1, fl in zip(res.times, res.tv, res.d1, res.noise_floor)],
    )
    summary = {
        "experiment": "ergodicity",
        "decay": [
            {"t": qty(t, tol=scheme.dt0), "tv": qty(tv, noise_floor=fl), "d1": qty(d1, noise_floor=fl)}
            for t, tv, d1, fl in zip(res.times, res.tv, res.d1, res.noise_floor)
        ],
        "rate": qty(res.rate, reliable=res.reliable, n_eligible=res.n_eligible),
        "final_tv": qty(res.final_tv, noise_floor=res.noise_floor[-1]),
        "nonincreasing_within_floor": res.nonincreasing_within_floor,
    }
    write_summary(outdir, summary)
    print(f"d1 decay {list(res.d1)}; final tv {res.final_tv:.4f}; rate {res.rate} (reliable: {res.reliable})")
    return 0


def cmd_counterexample_1d(cfg: dict, outdir: Path) -> int:
    model = build_scalar_model(cfg)
    c = cfg["counterexample"]
    if not positivity_audit(model):
        print("coefficient positivity audit failed", file=sys.stderr)
        return 2
    crit = explosion_criterion(model)
    lim = phi_limit(model)
    tstar = ode_blowup_time_1d(model)
    mc = explosion_mc_1d(
        model,
        n_paths=int(c["n_paths"]),
        dt=float(c["dt0"]),
        checkpoints=tuple(float(t) for t in c["checkpoints"]),
        seed=build_scheme(cfg).seed,
    )
    oracle = None
    if mc.branch == "finite":
        # constant-A oracle: first passage of drifted Brownian motion (exact for b = sigma)
        from .counterexample1d import a_drift

        a_vals = [a_drift(model, y) for y in (0.1, 0.5, 1.0)]
        if max(a_vals) - min(a_vals) < 1e-9:
            nu = a_vals[0]
            oracle = [inverse_gaussian_cdf(t - 0.0, mc.level - mc.y0, nu) for t in mc.checkpoints]
    rows = []
    for i, t in enumerate(mc.checkpoints):
        rows.append([t, mc.fractions[i], oracle[i] if oracle is not None else float("nan")])
    write_csv(outdir / "cdf1d.csv", ["t", "mc_fraction", "oracle_cdf"], rows)
    feller = None
    if not lim.finite:
        feller = feller_integral(model)
    summary = {
        "experiment": "counterexample-1d",
        "ode_integral": qty(crit.value if crit.finite else float("nan"), finite=crit.finite, tol=1e-8),
        "phi_limit": qty(lim.value if lim.finite else float("nan"), finite=lim.finite, tol=1e-8),
        "t_star": qty(tstar if tstar is not None else float("nan"), tol=1e-8),
        "branch": mc.branch,
        "mc_fractions": [
            {"t": qty(t, tol=float(c["dt0"])), "fraction": qty(f, ci95=None), "oracle": qty(oracle[i] if oracle else float("nan"), tol=0.03)}
            for i, (t, f) in enumerate(zip(mc.checkpoints, mc.fractions))
        ],
        "level_sensitivity": list(mc.level_sensitivity) if mc.level_sensitivity else None,
        "feller_double_integral": qty(
            feller.double_integral.value if feller and feller.double_integral.finite else float("nan"),
            finite=feller.double_integral.finite if feller else None,
        )
        if feller
        else None,
        "feller_inequality_ok": feller.inequality_ok if feller else None,
    }
    write_summary(outdir, summary)
    print(f"1-d branch {mc.branch}; final MC fraction {mc.fractions[-1]}")
    return 0


def cmd_all_acceptance(cfg: dict, outdir: Path) -> int:
    report = acceptance.run_all(cfg, outdir)
    write_summary(outdir, report.to_summary())
    for item in report.criteria:
        print(f"ACCEPTANCE {item.number:>2} {item.name}: {'PASS' if item.passed else 'FAIL'}")
    print(f"{report.n_passed}/{len(report.criteria)} criteria passed")
    return 0 if report.all_passed else 3


_DISPATCH = {
    "validate": cmd_validate,
    "ode-blowup": cmd_ode_blowup,
    "simulate": cmd_simulate,
    "explode-prob": cmd_explode_prob,
    "zero-avoid": cmd_zero_avoid,
    "tau-r": cmd_tau_r,
    "lyapunov-scan": cmd_lyapunov_scan,
    "superlyap-fit": cmd_superlyap_fit,
    "ito-strat-check": cmd_ito_strat_check,
    "ergodicity": cmd_ergodicity,
    "counterexample-1d": cmd_counterexample_1d,
    "all-acceptance": cmd_all_acceptance,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdelab",
        description="Monte Carlo laboratory for explosion prevention by multiplicative Stratonovich noise",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", default=None, help="output directory (default from config)")
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="reserved worker-count hint; the runner is vectorized single-process and results never depend on it",
    )
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, tuple(args.overrides), args.seed)
    except (ConfigError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    params_report = validate_params(build_params(cfg))
    if not params_report.ok and args.command != "validate":
        for v in params_report.violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2

    outdir = Path(args.out) if args.out is not None else Path(cfg["output"]["dir"])
    outdir = outdir / args.command
    try:
        return _DISPATCH[args.command](cfg, outdir)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
