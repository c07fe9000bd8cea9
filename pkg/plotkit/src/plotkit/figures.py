"""The four figure kinds and their schema contracts.

Each renderer states the columns it needs and refuses anything else;
the only numbers computed here are rendering arithmetic (ECDF steps,
the DKW band width, histogram binning).  Deterministic output: fixed
style, fixed SVG hash salt, no timestamps.
"""

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .csvio import SchemaError, Table, load_table

plt.rcParams["svg.hashsalt"] = "plotkit"
plt.rcParams["svg.fonttype"] = "none"


class DataError(ValueError):
    """Inputs parse but cannot support the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    out: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None


_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "svg.hashsalt": "plotkit",
    "svg.fonttype": "none",
}


def _caption(tables: list[Table]) -> str:
    parts = [f"{t.path.name} sha256:{t.sha256}" for t in tables]
    return "inputs: " + "; ".join(parts)


def _finish(fig, axes, spec: FigureSpec, tables: list[Table]) -> None:
    if spec.title:
        axes.set_title(spec.title)
    if spec.xlabel:
        axes.set_xlabel(spec.xlabel)
    if spec.ylabel:
        axes.set_ylabel(spec.ylabel)
    fig.text(0.01, 0.005, _caption(tables), fontsize=4.5, family="monospace")
    fig.savefig(spec.out, format="svg", metadata={"Date": None})
    plt.close(fig)


def _render_cdf_overlay(spec: FigureSpec) -> list[Table]:
    sim, law = (load_table(p) for p in spec.inputs)
    sim.require("centered_min")
    law.require("t", "F")
    x = np.sort(sim["centered_min"])
    n = x.size
    if n == 0:
        raise DataError(f"{sim.path}: no rows to build an ECDF from")
    ecdf = np.arange(1, n + 1) / n
    eps = math.sqrt(math.log(2.0 / 0.01) / (2.0 * n))  # 99% DKW band

    fig, ax = plt.subplots()
    ax.fill_between(
        x,
        np.clip(ecdf - eps, 0.0, 1.0),
        np.clip(ecdf + eps, 0.0, 1.0),
        step="post",
        alpha=0.25,
        linewidth=0.0,
        label=f"99% DKW band (N={n})",
    )
    ax.step(x, ecdf, where="post", linewidth=1.0, label="empirical CDF")
    ax.plot(law["t"], law["F"], linewidth=1.2, linestyle="--", label="limit law")
    ax.set_xlabel("n (m_n - 1)")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    _finish(fig, ax, spec, [sim, law])
    return [sim, law]


def _render_decay(spec: FigureSpec) -> list[Table]:
    (tab,) = (load_table(p) for p in spec.inputs)
    tab.require("step", "w2")
    steps = tab["step"]
    w2 = tab["w2"]
    if steps.size < 2:
        raise DataError(f"{tab.path}: need at least two steps for a decay plot")
    positive = w2 > 0.0

    fig, ax = plt.subplots()
    ax.semilogy(steps[positive], w2[positive], marker="o", linewidth=1.0,
                label="coupled W2")
    # Reference: one-over-sqrt-2 contraction per step from the start.
    ref = w2[0] * (0.5 ** (0.5 * (steps - steps[0])))
    ax.semilogy(steps, ref, linestyle="--", linewidth=1.0,
                label="slope ln(1/sqrt 2)")
    ax.set_xlabel("smoothing step")
    ax.set_ylabel("W2 distance")
    ax.legend(loc="upper right")
    _finish(fig, ax, spec, [tab])
    return [tab]


def _render_scatter(spec: FigureSpec) -> list[Table]:
    (tab,) = (load_table(p) for p in spec.inputs)
    tab.require("env_id", "bound", "tv", "stderr")
    bound = tab["bound"]
    tv = tab["tv"]
    if bound.size == 0:
        raise DataError(f"{tab.path}: no environments to plot")

    fig, ax = plt.subplots()
    ax.errorbar(bound, tv, yerr=3.0 * tab["stderr"], fmt="o", markersize=3.5,
                capsize=2.0, linewidth=0.8, label="measured TV (3 s.e.)")
    hi = float(max(bound.max(), tv.max())) * 1.1 or 1.0
    ax.plot([0.0, hi], [0.0, hi], linestyle="--", linewidth=1.0,
            label="TV = bound")
    ax.set_xlim(0.0, hi)
    ax.set_ylim(0.0, hi)
    ax.set_xlabel("three-term bound")
    ax.set_ylabel("measured total variation")
    ax.legend(loc="upper left")
    _finish(fig, ax, spec, [tab])
    return [tab]


def _render_density_audit(spec: FigureSpec) -> list[Table]:
    samples, grid = (load_table(p) for p in spec.inputs)
    samples.require("sample_id", "r", "z")
    grid.require("z", "density", "claimed_density")
    z = samples["z"][samples["r"] == -1.0]
    if z.size == 0:
        raise DataError(
            f"{samples.path}: no mixing rows (r = -1); "
            "rerun the cascade command with --mixing"
        )

    fig, ax = plt.subplots()
    edges = np.linspace(0.0, float(z.max()), 61)
    ax.hist(z, bins=edges, density=True, alpha=0.35, label=f"samples (N={z.size})")
    ax.plot(grid["z"], grid["density"], linewidth=1.2, label="2 K0(2 sqrt z)")
    ax.plot(grid["z"], grid["claimed_density"], linewidth=1.2, linestyle="--",
            label="z^2-weighted display (mass 4)")
    ax.set_xlabel("z")
    ax.set_ylabel("density")
    ax.legend(loc="upper right")
    _finish(fig, ax, spec, [samples, grid])
    return [samples, grid]


_KINDS = {
    "cdf-overlay": (_render_cdf_overlay, 2, "simulate CSV + limit-law grid"),
    "decay": (_render_decay, 1, "contraction trace"),
    "scatter": (_render_scatter, 1, "chenstein report"),
    "density-audit": (_render_density_audit, 2, "cascade samples + mixture grid"),
}


def render(spec: FigureSpec) -> list[Table]:
    """Draw one figure; returns the loaded inputs (with digests)."""
    if spec.kind not in _KINDS:
        raise SchemaError(
            f"unknown kind {spec.kind!r}; choose from {sorted(_KINDS)}"
        )
    fn, arity, what = _KINDS[spec.kind]
    if len(spec.inputs) != arity:
        raise SchemaError(
            f"{spec.kind} needs {arity} input file(s) ({what}), "
            f"got {len(spec.inputs)}"
        )
    with plt.rc_context(_STYLE):
        return fn(spec)
