"""Time-stepping engines with explosion / zero-hit detection and reproducible noise.

Schemes: tamed and plain Euler for the Ito form, a Heun predictor-corrector
targeting the Stratonovich form, plain Euler for the additive-noise image
equation, and an error-controlled adaptive ODE engine for the noise-free
blow-up oracle.  Noise comes from counter-based Philox streams keyed by
(seed, path_id with), so every path is a pure function of its inputs and
independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import solve_ivp

from .coefficients import DriftSpec, ModelParams, ito_drift_batch, sigma_apply
from .transform import TransformContext, transformed_drift_batch

__all__ = [
    "SchemeConfig",
    "SdePath",
    "SdeModel",
    "HybridSpec",
    "OdeBlowupResult",
    "normal_increments",
    "batch_normals",
    "make_model",
    "make_y_model",
    "step_tamed_euler",
    "step_euler",
    "step_heun_stratonovich",
    "step_y_additive",
    "simulate_path",
    "simulate_batch",
    "run_fixed_steps",
    "ode_solve_explosive",
    "STATUS_COMPLETED",
    "STATUS_EXPLODED",
    "STATUS_HIT_ZERO",
    "STATUS_ENTERED_BALL",
    "STATUS_INVALID",
]

_MASK64 = (1 << 64) - 1

X_SCHEMES = ("tamed_euler_ito", "euler_ito", "heun_stratonovich")
SCHEMES = X_SCHEMES + ("y_euler_additive", "ode_adaptive", "tamed_euler_hybrid")

STATUS_RUNNING = 0
STATUS_COMPLETED = 1
STATUS_EXPLODED = 2
STATUS_HIT_ZERO = 3
STATUS_ENTERED_BALL = 4
STATUS_INVALID = 5

STATUS_NAMES = {
    STATUS_RUNNING: "running",
    STATUS_COMPLETED: "completed",
    STATUS_EXPLODED: "exploded",
    STATUS_HIT_ZERO: "hit_zero",
    STATUS_ENTERED_BALL: "entered_ball",
    STATUS_INVALID: "invalid",
}


@dataclass(frozen=True)
class SchemeConfig:
    """Stepping scheme selection and run horizon.

    x_max and eps_zero default to the values carried by ModelParams; set them
    here to override per run.  watch_radius arms entered_ball detection: entry
    into the ball for X-space schemes, exit through the sphere for the image
    scheme (where leaving the ball of radius R^-eta means the original process
    entered B_R).
    """

    scheme: str = "tamed_euler_ito"
    dt0: float = 1.0e-3
    t_end: float = 5.0
    adaptive: bool = True
    x_max: Optional[float] = None
    eps_zero: Optional[float] = None
    seed: int = 0
    watch_radius: Optional[float] = None
    record_every: int = 1
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt0 > 0.0:
            raise ValueError(f"dt0 must be > 0 (got {self.dt0})")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be > 0 (got {self.t_end})")

    @property
    def dt_floor(self) -> float:
        return self.dt0 * 2.0**-20


@dataclass(frozen=True)
class SdePath:
    """One simulated path: recorded grid, terminal status and diagnostics.

    times are strictly increasing and states are finite up to the recorded
    stopping event; min_radius is the smallest distance from the origin seen
    along the piecewise-linear path.
    """

    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    status: str
    t_event: Optional[float]
    path_id: int
    seed: int
    min_radius: float
    n_steps: int
    floor_hits: int = 0
    event_radius: Optional[float] = None


def normal_increments(seed: int, path_id: int, step_index: int, count: int) -> np.ndarray:
    """Standard normal draws, a pure function of (seed, path_id, step_index).

    Each step owns a disjoint block of a Philox counter space keyed by
    (seed, path_id); identical inputs give identical draws on every platform
    and thread schedule.
    """
    key = np.array([seed & _MASK64, path_id & _MASK64], dtype=np.uint64)
    counter = np.array([0, step_index & _MASK64, 0, 0], dtype=np.uint64)
    return Generator(Philox(key=key, counter=counter)).standard_normal(count)


def batch_normals(seed: int, tag: int, iteration: int, shape: tuple[int, ...]) -> np.ndarray:
    """Per-iteration normal block for the vectorized ensemble runner.

    Lives in a counter namespace disjoint from normal_increments (third
    counter word set), so ensemble noise never collides with per-path streams.
    """
    key = np.array([seed & _MASK64, tag & _MASK64], dtype=np.uint64)
    counter = np.array([0, iteration & _MASK64, 1, 0], dtype=np.uint64)
    return Generator(Philox(key=key, counter=counter)).standard_normal(shape)


@dataclass(frozen=True)
class SdeModel:
    """Coefficient callables consumed by the steppers (all batch, rows = paths).

    Custom instances serve as test doubles (zero drift, constant noise, ...).
    """

    d: int
    drift_strat: Callable[[np.ndarray], np.ndarray]
    drift_ito: Callable[[np.ndarray], np.ndarray]
    sigma_dot: Callable[[np.ndarray, np.ndarray], np.ndarray]


def make_model(params: ModelParams, drift: DriftSpec) -> SdeModel:
    """Standard model: the configured drift with the radial Stratonovich noise.

    Custom drifts have their growth certificate spot-checked here (a warning,
    never a silent trust).
    """
    if drift.kind == "custom":
        drift.spot_check_growth(params)
    return SdeModel(
        d=params.d,
        drift_strat=lambda X: drift(params, X),
        drift_ito=lambda X: ito_drift_batch(params, drift, X),
        sigma_dot=lambda X, V: sigma_apply(params, X, V),
    )


def make_y_model(ctx: TransformContext) -> SdeModel:
    """Image-equation model: drift g, additive unit noise."""
    g = lambda Y: transformed_drift_batch(ctx, Y)
    return SdeModel(d=ctx.params.d, drift_strat=g, drift_ito=g, sigma_dot=lambda Y, V: V)


@dataclass(frozen=True)
class HybridSpec:
    """Chart-switching rule for faithful long runs of the full model.

    The original coordinates are numerically singular at large radius: past
    |x| ~ 1/sqrt(dt_floor * |sigma'|...) the floored adaptive step carries
    over 100% multiplicative noise and the discrete log-radius walk acquires
    a spurious upward drift, which manufactures explosions the continuum does
    not have.  The image chart y = |x|^(-eta-1)x has additive noise and a
    bounded (or integrably singular) drift there, so the runner steps X inside
    |x| <= r_out, switches to the image chart beyond, and returns to X once
    the image radius recovers past the phi-image of r_in (hysteresis).
    Explosion keeps its exact meaning: the image path within x_max^(-eta) of
    the origin, detected on the piecewise-linear path.
    """

    ctx: TransformContext
    r_out: float
    r_in: float
    min_scale: Optional[float] = None

    @classmethod
    def for_context(cls, ctx: TransformContext, min_scale: Optional[float] = None) -> "HybridSpec":
        # switch early: the image chart has additive noise and a bounded (or
        # integrably singular) drift, so it is better conditioned than the
        # stiff original chart as soon as the outer sigma formula applies
        base = max(1.0, ctx.params.r_switch)
        return cls(ctx=ctx, r_out=8.0 * base, r_in=4.0 * base, min_scale=min_scale)

    def scale_floor(self, x_max: float) -> float:
        """Smallest image scale the stepper resolves.

        Defaults to the image of the explosion radius, which fully resolves
        the detection event; runs that push the flag out of reach (ergodicity)
        should set min_scale explicitly, since iteration cost grows with the
        square of the log-depth resolved.
        """
        if self.min_scale is not None:
            return self.min_scale
        return x_max ** (-self.ctx.params.eta)


def _tamed(db: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """dt * b / (1 + dt |b|) rowwise; the increment norm stays below 1."""
    nb = np.linalg.norm(db, axis=-1, keepdims=True)
    return dt[..., None] * db / (1.0 + dt[..., None] * nb)


def _step_tamed_batch(model: SdeModel, X: np.ndarray, dt: np.ndarray, dW: np.ndarray) -> np.ndarray:
    return X + _tamed(model.drift_ito(X), dt) + model.sigma_dot(X, dW)


def _step_euler_batch(model: SdeModel, X: np.ndarray, dt: np.ndarray, dW: np.ndarray) -> np.ndarray:
    return X + dt[:, None] * model.drift_ito(X) + model.sigma_dot(X, dW)


def _step_heun_batch(model: SdeModel, X: np.ndarray, dt: np.ndarray, dW: np.ndarray) -> np.ndarray:
    # predictor with tamed Stratonovich drift, midpoint corrector in drift and noise
    b0 = model.drift_strat(X)
    xbar = X + _tamed(b0, dt) + model.sigma_dot(X, dW)
    b1 = model.drift_strat(xbar)
    return X + 0.5 * (_tamed(b0, dt) + _tamed(b1, dt)) + 0.5 * (model.sigma_dot(X, dW) + model.sigma_dot(xbar, dW))


_BATCH_STEPPERS = {
    "tamed_euler_ito": _step_tamed_batch,
    "euler_ito": _step_euler_batch,
    "heun_stratonovich": _step_heun_batch,
}


def step_tamed_euler(params: ModelParams, drift: DriftSpec, x: np.ndarray, dt: float, dW: np.ndarray) -> np.ndarray:
    """One tamed Euler step: x + dt b~(x)/(1 + dt |b~(x)|) + sigma(x) dW."""
    m = make_model(params, drift)
    return _step_tamed_batch(m, np.asarray(x, float)[None, :], np.array([dt]), np.asarray(dW, float)[None, :])[0]


def step_euler(params: ModelParams, drift: DriftSpec, x: np.ndarray, dt: float, dW: np.ndarray) -> np.ndarray:
    """One plain (untamed) Euler-Maruyama step for the Ito form."""
    m = make_model(params, drift)
    return _step_euler_batch(m, np.asarray(x, float)[None, :], np.array([dt]), np.asarray(dW, float)[None, :])[0]


def step_heun_stratonovich(params: ModelParams, drift: DriftSpec, x: np.ndarray, dt: float, dW: np.ndarray) -> np.ndarray:
    """One Heun predictor-corrector step targeting the Stratonovich integral.

    Taming is applied inside every drift evaluation, which keeps the predictor
    finite in the super-linear regime without touching the midpoint structure
    of the diffusion term.
    """
    m = make_model(params, drift)
    return _step_heun_batch(m, np.asarray(x, float)[None, :], np.array([dt]), np.asarray(dW, float)[None, :])[0]


def step_y_additive(ctx: TransformContext, y: np.ndarray, dt: float, dW: np.ndarray) -> np.ndarray:
    """One Euler step of the image equation: y + dt g(y) + dW."""
    y = np.asarray(y, dtype=float)
    return y + dt * transformed_drift_batch(ctx, y[None, :])[0] + np.asarray(dW, dtype=float)


def _segment_min_dist(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min distance from the origin to each segment [a_i, b_i] and its parameter."""
    D = B - A
    dd = np.einsum("ij,ij->i", D, D)
    ad = np.einsum("ij,ij->i", A, D)
    s = np.where(dd > 0.0, np.clip(-ad / np.where(dd > 0.0, dd, 1.0), 0.0, 1.0), 0.0)
    closest = A + s[:, None] * D
    return np.linalg.norm(closest, axis=1), s


@dataclass
class BatchResult:
    """Ensemble outcome: per-path status, events and checkpoint snapshots."""

    final_states: np.ndarray
    status: np.ndarray
    t_event: np.ndarray
    t_final: np.ndarray
    min_radius: np.ndarray
    n_steps: np.ndarray
    floor_hits: np.ndarray
    checkpoints: tuple[float, ...]
    checkpoint_states: dict[float, np.ndarray]
    checkpoint_mask: dict[float, np.ndarray]

    def fraction(self, status_code: int) -> float:
        return float(np.mean(self.status == status_code))

    def status_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.status == code)) for code, name in STATUS_NAMES.items() if code}


def simulate_batch(
    model: SdeModel,
    config: SchemeConfig,
    x0s: np.ndarray,
    *,
    seed_tag: int = 0,
    x_max: Optional[float] = None,
    eps_zero: Optional[float] = None,
    y_mode: bool = False,
    y_stop: Optional[float] = None,
    checkpoints: Sequence[float] = (),
    hybrid: Optional[HybridSpec] = None,
    max_iter: int = 5_000_000,
) -> BatchResult:
    """Advance an ensemble in lockstep, one vectorized step per iteration.

    Every path keeps its own adaptive dt and clock; noise for iteration k is
    the k-th Philox block of (config.seed, seed_tag), so the result is a pure
    function of the arguments.  X-space runs detect explosion (|x| >= x_max)
    and optional ball entry; image-space runs (y_mode) detect zero hits
    (piecewise-linear path within eps_zero of the origin) and optional exit
    through |y| = y_stop.  The tamed_euler_hybrid scheme steps X inside
    hybrid.r_out and the image chart beyond it; checkpoint snapshots are
    always reported in X coordinates.
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    n, d = x0s.shape
    if d != model.d:
        raise ValueError(f"x0s dimension {d} does not match model dimension {model.d}")
    hybrid_mode = config.scheme == "tamed_euler_hybrid"
    if hybrid_mode:
        if hybrid is None:
            raise ValueError("tamed_euler_hybrid requires a HybridSpec")
        stepper = _BATCH_STEPPERS["tamed_euler_ito"]
        eta = hybrid.ctx.params.eta
        y_model = make_y_model(hybrid.ctx)
        y_back = hybrid.r_in ** (-eta)  # image radius at the Y->X switch
        y_scale_floor = hybrid.scale_floor(x_max if x_max is not None else config.x_max or np.inf)
    else:
        stepper = None if y_mode else _BATCH_STEPPERS[config.scheme]
    dt_floor = config.dt_floor
    watch = config.watch_radius
    xm = x_max if x_max is not None else config.x_max

    X = x0s.copy()
    in_y = np.zeros(n, dtype=bool)  # hybrid chart flag: state stored in image coords
    if hybrid_mode:
        far = np.linalg.norm(X, axis=1) >= hybrid.r_out
        if np.any(far):
            rr = np.linalg.norm(X[far], axis=1, keepdims=True)
            X[far] = rr ** (-eta) * (X[far] / rr)
            in_y[far] = True
    t = np.zeros(n)
    status = np.full(n, STATUS_RUNNING, dtype=np.int8)
    t_event = np.full(n, np.nan)
    min_radius = np.linalg.norm(x0s, axis=1)
    n_steps = np.zeros(n, dtype=np.int64)
    floor_hits = np.zeros(n, dtype=np.int64)

    # immediate-entry check: starting inside the watched ball counts at t = 0
    if watch is not None and not y_mode:
        inside = min_radius <= watch
        status[inside] = STATUS_ENTERED_BALL
        t_event[inside] = 0.0

    cps = tuple(float(c) for c in checkpoints)
    cp_states = {c: np.full((n, d), np.nan) for c in cps}
    cp_mask = {c: np.zeros(n, dtype=bool) for c in cps}
    cp_ptr = np.zeros(n, dtype=np.int64)
    cps_arr = np.array(cps) if cps else None

    it = 0
    while True:
        alive = status == STATUS_RUNNING
        if not np.any(alive):
            break
        if it >= max_iter:
            raise RuntimeError(
                f"simulate_batch exceeded max_iter={max_iter} with {int(np.sum(alive))} paths still running"
            )
        idx = np.nonzero(alive)[0]
        Z = batch_normals(config.seed, seed_tag, it, (idx.size, d))
        Xa = X[idx]
        ta = t[idx]

        if y_mode:
            Zl = Z
            g = model.drift_ito(Xa)
            gn = np.linalg.norm(g, axis=1)
            rn = np.linalg.norm(Xa, axis=1)
            dt = np.full(idx.size, config.dt0)
            # halve dt until |g| dt <= 0.1 |y|; paths violating even at the floor
            # are plunging into the singularity and are recorded as zero hits
            viol = gn * dt > 0.1 * rn
            if np.any(viol):
                with np.errstate(divide="ignore", invalid="ignore"):
                    k = np.ceil(np.log2(gn * config.dt0 / (0.1 * rn)))
                k = np.where(viol, np.maximum(k, 1.0), 0.0)
                hopeless = k > 20.0
                dt = config.dt0 * 2.0 ** (-np.minimum(k, 20.0))
                floor_hits[idx[k >= 20.0]] += 1
                if np.any(hopeless):
                    hid = idx[hopeless]
                    status[hid] = STATUS_HIT_ZERO
                    t_event[hid] = t[hid]
                    keep = ~hopeless
                    idx, Xa, ta, g, dt, Zl = idx[keep], Xa[keep], ta[keep], g[keep], dt[keep], Zl[keep]
                    if idx.size == 0:
                        it += 1
                        continue
            dt = np.minimum(dt, config.t_end - ta)
            Xn = Xa + dt[:, None] * g + np.sqrt(dt)[:, None] * Zl
        elif hybrid_mode:
            Xn = np.empty_like(Xa)
            dt = np.empty(idx.size)
            iny_a = in_y[idx]
            if np.any(~iny_a):
                rows = np.nonzero(~iny_a)[0]
                Xr = Xa[rows]
                bt = model.drift_ito(Xr)
                dtr = config.dt0 / (1.0 + np.linalg.norm(bt, axis=1))
                dtr = np.maximum(dtr, dt_floor)  # unreachable before the chart switch
                dtr = np.minimum(dtr, config.t_end - ta[rows])
                dt[rows] = dtr
                Xn[rows] = stepper(model, Xr, dtr, np.sqrt(dtr)[:, None] * Z[rows])
            if np.any(iny_a):
                rows = np.nonzero(iny_a)[0]
                Yr = Xa[rows]
                g = y_model.drift_ito(Yr)
                gn = np.linalg.norm(g, axis=1)
                rn = np.linalg.norm(Yr, axis=1)
                # resolve the local scale (noise per step <= s/4, drift <= s/10)
                # but never below the configured floor: deeper excursions cost
                # iterations quadratically and carry no simulated time
                s = np.maximum(rn, y_scale_floor)
                dtr = np.minimum(config.dt0, (s / 4.0) ** 2)
                dtr = np.minimum(dtr, 0.1 * s / np.maximum(gn, 1e-300))
                dtr = np.minimum(dtr, config.t_end - ta[rows])
                dt[rows] = dtr
                Xn[rows] = Yr + dtr[:, None] * g + np.sqrt(dtr)[:, None] * Z[rows]
        else:
            bt = model.drift_ito(Xa)
            if config.adaptive:
                dt = config.dt0 / (1.0 + np.linalg.norm(bt, axis=1))
                floored = dt < dt_floor
                floor_hits[idx[floored]] += 1
                dt = np.maximum(dt, dt_floor)
            else:
                dt = np.full(idx.size, config.dt0)
            dt = np.minimum(dt, config.t_end - ta)
            Xn = stepper(model, Xa, dt, np.sqrt(dt)[:, None] * Z[: idx.size])

        tn = ta + dt
        n_steps[idx] += 1

        bad = ~np.all(np.isfinite(Xn), axis=1)
        seg_d, seg_s = _segment_min_dist(Xa, Xn)
        new_norm = np.where(bad, np.inf, np.linalg.norm(np.where(np.isfinite(Xn), Xn, 0.0), axis=1))
        if hybrid_mode:
            x_chart = ~in_y[idx]
            upd = x_chart & ~bad
            min_radius[idx[upd]] = np.minimum(min_radius[idx[upd]], seg_d[upd])
        else:
            min_radius[idx] = np.minimum(min_radius[idx], np.where(bad, min_radius[idx], seg_d))

        X[idx] = np.where(bad[:, None], X[idx], Xn)
        t[idx] = tn

        if np.any(bad):
            status[idx[bad]] = STATUS_INVALID
            t_event[idx[bad]] = tn[bad]

        live = ~bad
        if y_mode:
            ez = eps_zero if eps_zero is not None else config.eps_zero
            hit = live & (seg_d <= ez)
            if np.any(hit):
                status[idx[hit]] = STATUS_HIT_ZERO
                t_event[idx[hit]] = ta[hit] + seg_s[hit] * dt[hit]
                live = live & ~hit
            if y_stop is not None:
                out = live & (new_norm >= y_stop)
                if np.any(out):
                    status[idx[out]] = STATUS_ENTERED_BALL
                    t_event[idx[out]] = tn[out]
                    live = live & ~out
        elif hybrid_mode:
            iny_a = in_y[idx]
            # explosion: X-chart by endpoint norm, image chart by passage near 0
            eps_y = xm ** (-eta)
            expl = live & np.where(iny_a, seg_d <= eps_y, new_norm >= xm)
            if np.any(expl):
                status[idx[expl]] = STATUS_EXPLODED
                t_event[idx[expl]] = np.where(iny_a[expl], ta[expl] + seg_s[expl] * dt[expl], tn[expl])
                live = live & ~expl
            if watch is not None:
                ent = live & ~iny_a & (seg_d <= watch)
                if np.any(ent):
                    status[idx[ent]] = STATUS_ENTERED_BALL
                    t_event[idx[ent]] = ta[ent] + seg_s[ent] * dt[ent]
                    live = live & ~ent
            # chart switches for survivors
            to_y = live & ~iny_a & (new_norm >= hybrid.r_out)
            if np.any(to_y):
                rows = idx[to_y]
                rr = np.linalg.norm(X[rows], axis=1, keepdims=True)
                X[rows] = rr ** (-eta) * (X[rows] / rr)
                in_y[rows] = True
            to_x = live & iny_a & (new_norm >= y_back)
            if np.any(to_x):
                rows = idx[to_x]
                rr = np.linalg.norm(X[rows], axis=1, keepdims=True)
                X[rows] = rr ** (-1.0 / eta) * (X[rows] / rr)
                in_y[rows] = False
        else:
            expl = live & (new_norm >= xm)
            if np.any(expl):
                status[idx[expl]] = STATUS_EXPLODED
                t_event[idx[expl]] = tn[expl]
                live = live & ~expl
            if watch is not None:
                ent = live & (seg_d <= watch)
                if np.any(ent):
                    status[idx[ent]] = STATUS_ENTERED_BALL
                    t_event[idx[ent]] = ta[ent] + seg_s[ent] * dt[ent]
                    live = live & ~ent

        if cps_arr is not None and np.any(live):
            lidx = idx[live]
            while True:
                has_cp = cp_ptr[lidx] < len(cps)
                if not np.any(has_cp):
                    break
                sub = lidx[has_cp]
                due = t[sub] >= cps_arr[cp_ptr[sub]] - 1e-12
                sub = sub[due]
                if sub.size == 0:
                    break
                for c_i in np.unique(cp_ptr[sub]):
                    rows = sub[cp_ptr[sub] == c_i]
                    c = cps[int(c_i)]
                    snap = X[rows]
                    if hybrid_mode and np.any(in_y[rows]):
                        snap = snap.copy()
                        yr = in_y[rows]
                        rr = np.linalg.norm(snap[yr], axis=1, keepdims=True)
                        snap[yr] = rr ** (-1.0 / eta) * (snap[yr] / rr)
                    cp_states[c][rows] = snap
                    cp_mask[c][rows] = True
                cp_ptr[sub] += 1

        done = live & (tn >= config.t_end - 1e-15)
        if np.any(done):
            status[idx[done]] = STATUS_COMPLETED
        it += 1

    final = X
    if hybrid_mode and np.any(in_y):
        final = X.copy()
        rr = np.linalg.norm(final[in_y], axis=1, keepdims=True)
        final[in_y] = rr ** (-1.0 / eta) * (final[in_y] / rr)
    return BatchResult(
        final_states=final,
        status=status,
        t_event=t_event,
        t_final=t,
        min_radius=min_radius,
        n_steps=n_steps,
        floor_hits=floor_hits,
        checkpoints=cps,
        checkpoint_states=cp_states,
        checkpoint_mask=cp_mask,
    )


def run_fixed_steps(
    model: SdeModel,
    scheme: str,
    x0s: np.ndarray,
    dt: float,
    increments: np.ndarray,
    freeze_radius: Optional[float] = None,
) -> np.ndarray:
    """Fixed-step trajectories with caller-supplied Brownian increments.

    increments has shape (n_steps, n_paths, d) and already carries the sqrt(dt)
    scaling of actual Wiener increments.  Returns (n_steps + 1, n_paths, d).
    Used by scheme-consistency studies that feed identical noise to different
    schemes and resolutions.  Paths are frozen once they leave the ball of
    freeze_radius: beyond it the comparison window has closed and further
    stepping would only push the super-linear coefficients toward overflow.
    """
    stepper = _BATCH_STEPPERS[scheme]
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    n_steps = increments.shape[0]
    out = np.empty((n_steps + 1,) + x0s.shape)
    out[0] = x0s
    dts = np.full(x0s.shape[0], dt)
    active = np.ones(x0s.shape[0], dtype=bool)
    for k in range(n_steps):
        if freeze_radius is not None:
            active &= np.linalg.norm(out[k], axis=1) < freeze_radius
        if not np.any(active):
            out[k + 1 :] = out[k]
            break
        nxt = out[k].copy()
        nxt[active] = stepper(model, out[k][active], dts[active], increments[k][active])
        out[k + 1] = nxt
    return out


def simulate_path(
    params: ModelParams,
    drift: DriftSpec,
    config: SchemeConfig,
    x0: np.ndarray,
    path_id: int = 0,
    *,
    model: Optional[SdeModel] = None,
    ctx: Optional[TransformContext] = None,
) -> SdePath:
    """Run one path to t_end or its first stopping event.

    x0 is in the coordinates of the chosen scheme (image coordinates for
    y_euler_additive, which requires x0 != 0).  The result is a pure function
    of (params, drift, config, x0, path_id); noise comes from the per-path
    counter stream.  A custom model can be injected for test doubles.
    """
    if config.scheme == "ode_adaptive":
        res = ode_solve_explosive(params, drift, x0, t_end=config.t_end, x_max=config.x_max or params.x_max)
        return replace(res.path, path_id=path_id, seed=config.seed)

    y_mode = config.scheme == "y_euler_additive"
    if y_mode:
        if float(np.linalg.norm(x0)) == 0.0:
            raise ValueError("image-space schemes require x0 != 0")
        if model is None:
            model = make_y_model(ctx if ctx is not None else TransformContext(params, drift))
    elif model is None:
        model = make_model(params, drift)

    x = np.asarray(x0, dtype=float).copy()
    d = x.size
    t = 0.0
    eps = config.eps_zero if config.eps_zero is not None else params.eps_zero
    xmax = config.x_max if config.x_max is not None else params.x_max
    dt_floor = config.dt_floor
    stepper = None if y_mode else _BATCH_STEPPERS[config.scheme]

    times = [0.0]
    states = [x.copy()]
    status = STATUS_COMPLETED
    t_event: Optional[float] = None
    event_radius: Optional[float] = None
    min_radius = float(np.linalg.norm(x))
    floor_hits = 0

    if config.watch_radius is not None and not y_mode and min_radius <= config.watch_radius:
        return SdePath(
            times=np.array([0.0]),
            states=x[None, :].copy(),
            status=STATUS_NAMES[STATUS_ENTERED_BALL],
            t_event=0.0,
            path_id=path_id,
            seed=config.seed,
            min_radius=min_radius,
            n_steps=0,
            event_radius=config.watch_radius,
        )

    n = 0
    while t < config.t_end:
        if n >= config.max_steps:
            raise RuntimeError(f"simulate_path exceeded max_steps={config.max_steps}")
        xa = x[None, :]
        if y_mode:
            g = model.drift_ito(xa)[0]
            gn = float(np.linalg.norm(g))
            rn = float(np.linalg.norm(x))
            dt = config.dt0
            while gn * dt > 0.1 * rn and dt > dt_floor:
                dt *= 0.5
            if dt <= dt_floor and gn * dt > 0.1 * rn:
                floor_hits += 1
                status, t_event = STATUS_HIT_ZERO, t
                break
            dt = min(dt, config.t_end - t)
            z = normal_increments(config.seed, path_id, n, d)
            xn = x + dt * g + math.sqrt(dt) * z
        else:
            bt = model.drift_ito(xa)[0]
            if config.adaptive:
                dt = config.dt0 / (1.0 + float(np.linalg.norm(bt)))
                if dt < dt_floor:
                    dt = dt_floor
                    floor_hits += 1
            else:
                dt = config.dt0
            dt = min(dt, config.t_end - t)
            z = normal_increments(config.seed, path_id, n, d)
            xn = stepper(model, xa, np.array([dt]), (math.sqrt(dt) * z)[None, :])[0]
        n += 1

        if not np.all(np.isfinite(xn)):
            status, t_event = STATUS_INVALID, t + dt
            break
        seg_d, seg_s = _segment_min_dist(x[None, :], xn[None, :])
        min_radius = min(min_radius, float(seg_d[0]))
        x, t = xn, t + dt
        if n % config.record_every == 0 or t >= config.t_end:
            times.append(t)
            states.append(x.copy())

        rnorm = float(np.linalg.norm(x))
        if y_mode:
            if seg_d[0] <= eps:
                status, t_event = STATUS_HIT_ZERO, t - dt + float(seg_s[0]) * dt
                break
            if config.watch_radius is not None and rnorm >= config.watch_radius:
                status, t_event, event_radius = STATUS_ENTERED_BALL, t, config.watch_radius
                break
        else:
            if rnorm >= xmax:
                status, t_event = STATUS_EXPLODED, t
                break
            if config.watch_radius is not None and seg_d[0] <= config.watch_radius:
                status, t_event, event_radius = STATUS_ENTERED_BALL, t - dt + float(seg_s[0]) * dt, config.watch_radius
                break

    if times[-1] < t:
        times.append(t)
        states.append(x.copy())
    return SdePath(
        times=np.array(times),
        states=np.array(states),
        status=STATUS_NAMES[status],
        t_event=t_event,
        path_id=path_id,
        seed=config.seed,
        min_radius=min_radius,
        n_steps=n,
        floor_hits=floor_hits,
        event_radius=event_radius,
    )


@dataclass(frozen=True)
class OdeBlowupResult:
    """Noise-free run outcome with the analytic blow-up oracle when available."""

    path: SdePath
    t_reach: Optional[float]
    t_star: Optional[float]


def blowup_time_power(params: ModelParams, x0_norm: float) -> float:
    """Analytic blow-up time |x0|^(1-m) / (kappa (m-1)) of the power drift."""
    return x0_norm ** (1.0 - params.m) / (params.kappa * (params.m - 1.0))


def ode_solve_explosive(
    params: ModelParams,
    drift: DriftSpec,
    x0: np.ndarray,
    *,
    t_end: Optional[float] = None,
    x_max: Optional[float] = None,
    rtol: float = 1.0e-10,
    atol: float = 1.0e-9,
) -> OdeBlowupResult:
    """Integrate dx = b(x) dt until |x| reaches x_max, with error control.

    Uses an embedded Runge-Kutta pair with a terminal event at |x| = x_max,
    so the reported reach time carries the integrator's error control rather
    than a fixed-increment bias.  For the power drift the closed-form blow-up
    time is returned alongside as the oracle.
    """
    x0 = np.asarray(x0, dtype=float)
    xm = x_max if x_max is not None else params.x_max
    t_star = blowup_time_power(params, float(np.linalg.norm(x0))) if drift.kind == "power" else None
    horizon = t_end if t_end is not None else (1.5 * t_star if t_star is not None else 10.0)

    def rhs(_t: float, x: np.ndarray) -> np.ndarray:
        return drift(params, x[None, :])[0]

    def reach(_t: float, x: np.ndarray) -> float:
        return float(np.linalg.norm(x)) - xm

    reach.terminal = True
    reach.direction = 1.0
    sol = solve_ivp(rhs, (0.0, horizon), x0, method="RK45", rtol=rtol, atol=atol, events=reach, dense_output=False)
    exploded = sol.t_events[0].size > 0
    t_reach = float(sol.t_events[0][0]) if exploded else None
    path = SdePath(
        times=sol.t.copy(),
        states=sol.y.T.copy(),
        status=STATUS_NAMES[STATUS_EXPLODED if exploded else STATUS_COMPLETED],
        t_event=t_reach,
        path_id=0,
        seed=0,
        min_radius=float(np.min(np.linalg.norm(sol.y.T, axis=1))),
        n_steps=sol.t.size - 1,
    )
    return OdeBlowupResult(path=path, t_reach=t_reach, t_star=t_star)
