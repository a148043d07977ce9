"""Delimited output and figure rendering for the CLI report paths.

CSV is the canonical contract: floats print with 12 significant digits
and rerunning an experiment with the same config and master seed yields
byte-identical files. Figures are rendered next to the CSVs as PNG and
carry no determinism promise.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .density import DensityGrid, lln_constant
from .harness import (
    DisplacementReport,
    LocalMeasureReport,
    ResultRow,
    StationarityReport,
)


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


RESULT_HEADER = (
    "regime",
    "n",
    "beta",
    "replicas",
    "samples",
    "mean_lis",
    "stderr_lis",
    "normalization",
    "norm_name",
    "ratio",
    "target_constant",
    "two_start_ok",
)


def results_csv(rows: Sequence[ResultRow]) -> str:
    return csv_text(
        RESULT_HEADER,
        [
            (
                r.regime,
                r.n,
                r.beta,
                r.replicas,
                r.samples,
                r.mean_lis,
                r.stderr_lis,
                r.normalization,
                r.norm_name,
                r.ratio,
                r.target_constant,
                r.two_start_ok,
            )
            for r in rows
        ],
    )


def chain_csv_header() -> str:
    return "seed,step,lis,energy"


def render_ratio_figure(rows: Sequence[ResultRow], path: Path) -> None:
    """Normalized LIS ratio against n with replica standard errors and the target."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ns = [r.n for r in rows]
    ratios = [r.ratio for r in rows]
    errs = [3 * r.stderr_lis / r.normalization for r in rows]
    ax.errorbar(ns, ratios, yerr=errs, fmt="o-", capsize=3, label="measured ratio")
    if rows:
        ax.axhline(rows[0].target_constant, color="crimson", ls="--", lw=1, label="limit constant")
        ax.set_title(f"{rows[0].regime}: LIS / {rows[0].norm_name}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("ratio")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_density_figure(grid: DensityGrid, path: Path) -> None:
    """a(x) and the diagonal density rho(x,x), annotated with the LLN constant."""
    fig, axes = plt.subplots(1, 2, figsize=(7.5, 3.2))
    x = grid.midpoints
    axes[0].plot(x, grid.a, lw=1.2)
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("a(x)")
    axes[1].plot(x, np.exp(2 * grid.a), lw=1.2, color="darkgreen")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("rho(x, x)")
    fig.suptitle(
        f"{grid.kind.value} kernel, theta={grid.theta:g}, m={grid.m}: "
        f"LLN constant {lln_constant(grid):.6f}",
        fontsize=9,
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_tail_figure(report: DisplacementReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    u = np.array(report.u_values)
    ax.semilogy(u, np.maximum(report.empirical, 1e-12), "o-", label="empirical tail")
    ax.semilogy(u, report.bounds, "--", color="crimson", label="3 exp(-u/4)")
    ax.set_xlabel("u")
    ax.set_ylabel("P(|D_i| >= u)")
    ax.set_title(f"{report.kind.value} n={report.n} beta={report.beta:g} i={report.index}", fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_local_measure_figure(report: LocalMeasureReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.plot(report.betas, report.discrepancies, "s-")
    ax.set_xlabel("beta")
    ax.set_ylabel("mean sup-discrepancy")
    ax.set_title(
        f"{report.kind.value} n={report.n} t0={report.t0}: local measure vs limit", fontsize=9
    )
    ax.invert_xaxis()  # beta decreases toward the limit
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_stationarity_figure(reports: Sequence[StationarityReport], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    labels = [f"{r.kernel}\nn={r.n} b={r.beta:g} k={r.steps}" for r in reports]
    tvs = [r.tv if r.tv is not None else 0.0 for r in reports]
    noise = [r.mc_noise if r.mc_noise is not None else 0.0 for r in reports]
    xs = np.arange(len(reports))
    ax.bar(xs - 0.2, tvs, width=0.4, label="TV to exact")
    ax.bar(xs + 0.2, noise, width=0.4, label="MC noise floor")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("total variation")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
