"""Figure kinds and the render entry point.

Each kind declares the CSV columns it requires and fails loudly, naming the
missing column, when the schema does not match.  Figures are written as SVG
with a fixed hash salt and no embedded date, so re-rendering identical inputs
produces identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sdelab-plots"

import matplotlib.pyplot as plt

__all__ = ["FigureSpec", "SchemaError", "render", "FIGURE_KINDS"]


class SchemaError(ValueError):
    """Input file missing, empty, or lacking a required column."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: input artifact(s), kind, output image path."""

    inputs: tuple[str, ...]
    kind: str
    output: str


def _read_csv(path: str, required: Sequence[str]) -> dict[str, list]:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input file does not exist: {path}")
    with open(p, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"input file is empty: {path}") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"input file has a header but no data rows: {path}")
    out: dict[str, list] = {col: [] for col in header}
    for row in rows:
        for col, val in zip(header, row):
            out[col].append(val)
    return out


def _floats(column: list) -> list[float]:
    return [float(v) for v in column]


def _split_inputs(spec: FigureSpec) -> tuple[str, Optional[str]]:
    """First CSV input plus an optional JSON summary for annotations."""
    csv_path, summary = None, None
    for item in spec.inputs:
        if item.endswith(".json"):
            summary = item
        elif csv_path is None:
            csv_path = item
    if csv_path is None:
        raise SchemaError("figure needs at least one CSV input")
    return csv_path, summary


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, output: str) -> None:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def _render_decay(spec: FigureSpec) -> None:
    csv_path, summary_path = _split_inputs(spec)
    data = _read_csv(csv_path, ["t", "tv", "d1", "noise_floor"])
    t = _floats(data["t"])
    fig, ax = _new_axes()
    ax.semilogy(t, _floats(data["d1"]), "o-", label="weighted d1")
    ax.semilogy(t, _floats(data["tv"]), "s-", label="total variation")
    ax.semilogy(t, _floats(data["noise_floor"]), "--", color="gray", label="noise floor")
    if summary_path is not None:
        with open(summary_path, "r", encoding="utf-8") as fh:
            summary = json.load(fh)
        rate = summary.get("rate", {})
        if isinstance(rate, dict) and rate.get("value") is not None:
            ax.annotate(
                f"fitted rate: {rate['value']:.3g}" + ("" if rate.get("reliable", True) else " (unreliable)"),
                xy=(0.05, 0.05),
                xycoords="axes fraction",
            )
    ax.set_xlabel("time")
    ax.set_ylabel("distance between empirical laws")
    ax.set_title("Decay of distances between two ensembles")
    ax.legend()
    _save(fig, spec.output)


def _render_refinement(spec: FigureSpec) -> None:
    csv_path, _ = _split_inputs(spec)
    data = _read_csv(csv_path, ["dt", "mean_sup_error"])
    dt = _floats(data["dt"])
    err = _floats(data["mean_sup_error"])
    fig, ax = _new_axes()
    ax.loglog(dt, err, "o-", label="mean sup discrepancy")
    # order-1/2 guide anchored at the coarsest level
    guide = [err[0] * math.sqrt(d / dt[0]) for d in dt]
    ax.loglog(dt, guide, "--", color="gray", label=r"slope 1/2 guide")
    ax.set_xlabel("step size dt")
    ax.set_ylabel("sup-norm scheme discrepancy")
    ax.set_title("Shared-noise refinement: Heun vs tamed Euler")
    ax.legend()
    _save(fig, spec.output)


def _render_lv_profile(spec: FigureSpec) -> None:
    csv_path, _ = _split_inputs(spec)
    data = _read_csv(csv_path, ["r", "lv"])
    fig, ax = _new_axes()
    ax.plot(_floats(data["r"]), _floats(data["lv"]), "-")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xscale("log")
    ax.set_yscale("symlog")
    ax.set_xlabel("radius")
    ax.set_ylabel("generator applied to V")
    ax.set_title("Radial profile of the Lyapunov drift")
    _save(fig, spec.output)


def _render_fractions(spec: FigureSpec) -> None:
    csv_path, _ = _split_inputs(spec)
    data = _read_csv(csv_path, ["experiment", "fraction", "ci_lo", "ci_hi", "n"])
    names = data["experiment"]
    frac = _floats(data["fraction"])
    lo = _floats(data["ci_lo"])
    hi = _floats(data["ci_hi"])
    fig, ax = _new_axes()
    xs = range(len(names))
    yerr = [[f - a for f, a in zip(frac, lo)], [b - f for f, b in zip(frac, hi)]]
    ax.bar(xs, frac, color="#4477aa")
    ax.errorbar(xs, frac, yerr=yerr, fmt="none", ecolor="black", capsize=4)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("fraction (Wilson 95% interval)")
    ax.set_title("Event fractions")
    _save(fig, spec.output)


def _render_cdf_1d(spec: FigureSpec) -> None:
    csv_path, _ = _split_inputs(spec)
    data = _read_csv(csv_path, ["t", "mc_fraction", "oracle_cdf"])
    t = _floats(data["t"])
    fig, ax = _new_axes()
    ax.plot(t, _floats(data["mc_fraction"]), "o-", label="Monte Carlo")
    oracle = _floats(data["oracle_cdf"])
    if all(math.isfinite(v) for v in oracle):
        ax.plot(t, oracle, "--", label="first-passage oracle")
    ax.set_xlabel("time")
    ax.set_ylabel("explosion fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("Scalar counterexample: explosion fraction per checkpoint")
    ax.legend()
    _save(fig, spec.output)


def _render_paths(spec: FigureSpec) -> None:
    csv_path, _ = _split_inputs(spec)
    data = _read_csv(csv_path, ["t", "x1", "path_id"])
    t = _floats(data["t"])
    coords = [key for key in data if key.startswith("x") and key[1:].isdigit()]
    norms = []
    for i in range(len(t)):
        norms.append(math.sqrt(sum(float(data[c][i]) ** 2 for c in coords)))
    fig, ax = _new_axes()
    ax.semilogy(t, norms, "-")
    ax.set_xlabel("time")
    ax.set_ylabel("|x(t)|")
    ax.set_title("Path radius")
    _save(fig, spec.output)


FIGURE_KINDS = {
    "decay": _render_decay,
    "refinement": _render_refinement,
    "lv-profile": _render_lv_profile,
    "fractions": _render_fractions,
    "cdf-1d": _render_cdf_1d,
    "paths": _render_paths,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path.  Never mutates inputs."""
    if spec.kind not in FIGURE_KINDS:
        raise SchemaError(f"unknown figure kind {spec.kind!r}; choose from {sorted(FIGURE_KINDS)}")
    FIGURE_KINDS[spec.kind](spec)
    return spec.output
