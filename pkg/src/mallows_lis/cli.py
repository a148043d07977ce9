"""Command-line interface.

Subcommands: sample, lis, density, experiment, verify. Delimited output
follows the module CSV schemas (floats at 12 significant digits); when an
output directory is given, figures are rendered alongside the CSVs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .density import lln_constant, marginal_errors, solve_density
from .harness import (
    ExperimentConfig,
    parse_config,
    run_lln_experiment,
    verify_displacement,
    verify_local_measure,
    verify_paths,
    verify_stationarity,
)
from .models import ModelKind, ModelParams, energy
from .perm import Permutation, lis
from .samplers import ChainState, ResampleSpec, advance
from . import report as rpt


def _model_kind(name: str) -> ModelKind:
    return ModelKind.L1 if name == "l1" else ModelKind.L2


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def cmd_sample(args) -> int:
    kind = _model_kind(args.model)
    state = ChainState.init(ModelParams(args.n, args.beta, kind), args.seed, start=args.start)
    out = sys.stdout
    out.write(rpt.chain_csv_header() + "\n")
    done = 0
    while done < args.steps:
        chunk = min(args.thin, args.steps - done)
        advance(state, chunk)
        done += chunk
        p = state.permutation()
        row = (args.seed, state.step_count, lis(p), energy(kind, p))
        out.write(",".join(rpt.fmt(v) for v in row) + "\n")
        out.flush()
    if args.emit_perm:
        out.write(state.permutation().to_line() + "\n")
    return 0


def cmd_lis(args) -> int:
    line = Path(args.perm_file).read_text().strip()
    print(lis(Permutation.from_line(line)))
    return 0


def cmd_density(args) -> int:
    kind = _model_kind(args.model)
    grid = solve_density(kind, args.theta, m=args.grid, tol=args.tol)
    const = lln_constant(grid)
    out = sys.stdout
    out.write("x,a,rho_diag\n")
    for x, a in zip(grid.midpoints, grid.a):
        out.write(f"{x:.12g},{a:.12g},{np.exp(2 * a):.12g}\n")
    out.write(f"lln_constant,{const:.12g}\n")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "grid.csv").write_text(grid.to_csv())
        (outdir / "diagonal.csv").write_text(grid.diagonal_csv())
        rpt.render_density_figure(grid, outdir / "density.png")
    return 0


def cmd_experiment(args) -> int:
    cfg = parse_config(Path(args.config).read_text())
    rows = run_lln_experiment(cfg, workers=args.workers)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "results.csv").write_text(rpt.results_csv(rows))
    rpt.render_ratio_figure(rows, outdir / "ratio_vs_n.png")
    sys.stdout.write(rpt.results_csv(rows))
    flagged = [r for r in rows if not r.two_start_ok]
    if flagged:
        for r in flagged:
            print(f"warning: two-start diagnostic failed at n={r.n}", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    outdir = Path(args.out) if args.out else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    if args.check == "stationarity":
        kind = _model_kind(args.model)
        spec = None
        if args.kernel == "resample":
            spec = ResampleSpec(set(_int_list(args.sx)), set(_int_list(args.sy)), args.t0)
        rep = verify_stationarity(
            kind, args.n, args.beta, args.steps, args.trials, seed=args.seed, resample=spec
        )
        verdict = rep.passes(args.threshold)
        print(
            f"stationarity {rep.kernel} {kind.value} n={rep.n} beta={rep.beta:g} "
            f"k={rep.steps} trials={rep.trials}: "
            + (
                "no verdict (0 trials)"
                if verdict is None
                else f"TV={rep.tv:.6f} noise~{rep.mc_noise:.6f} threshold={args.threshold:g} "
                f"{'PASS' if verdict else 'FAIL'}"
            )
        )
        if outdir:
            (outdir / "stationarity.csv").write_text(
                rpt.csv_text(
                    ("kernel", "model", "n", "beta", "steps", "trials", "tv", "mc_noise"),
                    [(rep.kernel, kind.value, rep.n, rep.beta, rep.steps, rep.trials,
                      rep.tv if rep.tv is not None else float("nan"),
                      rep.mc_noise if rep.mc_noise is not None else float("nan"))],
                )
            )
            rpt.render_stationarity_figure([rep], outdir / "stationarity.png")
        return 0 if verdict is not False else 1
    if args.check == "paths":
        rep = verify_paths(args.trials, args.n_max, args.t_max, args.k0_max, seed=args.seed)
        print(
            f"paths sandwich: {rep.trials} instances, {len(rep.violations)} violations "
            f"(seed={rep.seed}) {'PASS' if rep.ok else 'FAIL'}"
        )
        for v in rep.violations[:10]:
            print(f"  violation: {v}")
        return 0 if rep.ok else 1
    if args.check == "local-measure":
        kind = _model_kind(args.model)
        rep = verify_local_measure(
            kind,
            args.n,
            _float_list(args.betas),
            args.t0,
            args.K,
            args.functions,
            args.replicas,
            args.burn_in,
            seed=args.seed,
            workers=args.workers,
        )
        pairs = ", ".join(
            f"beta={b:g}: {d:.5f}" for b, d in zip(rep.betas, rep.discrepancies)
        )
        print(
            f"local measure {kind.value} n={rep.n} t0={rep.t0} K={rep.K} "
            f"({rep.replicas} replicas): {pairs} -> "
            f"{'decreasing PASS' if rep.decreasing else 'not decreasing FAIL'}"
        )
        if outdir:
            (outdir / "local_measure.csv").write_text(
                rpt.csv_text(("beta", "sup_discrepancy"), list(zip(rep.betas, rep.discrepancies)))
            )
            rpt.render_local_measure_figure(rep, outdir / "local_measure.png")
        return 0 if rep.decreasing else 1
    if args.check == "displacement":
        kind = _model_kind(args.model)
        rep = verify_displacement(
            kind,
            args.n,
            args.beta,
            args.index,
            _float_list(args.u),
            args.replicas,
            args.samples,
            args.burn_in,
            args.thin,
            seed=args.seed,
            workers=args.workers,
        )
        print(
            f"displacement tails {kind.value} n={rep.n} beta={rep.beta:g} i={rep.index} "
            f"({rep.samples} samples): {'PASS' if rep.ok else 'FAIL'}"
        )
        for u, e, b, s in zip(rep.u_values, rep.empirical, rep.bounds, rep.slacks):
            print(f"  u={u:g}: empirical={e:.6f} bound={b:.6g} +3se={s:.6f}")
        if outdir:
            (outdir / "displacement.csv").write_text(
                rpt.csv_text(
                    ("u", "empirical_tail", "paper_bound", "mc_slack"),
                    list(zip(rep.u_values, rep.empirical, rep.bounds, rep.slacks)),
                )
            )
            rpt.render_tail_figure(rep, outdir / "displacement.png")
        return 0 if rep.ok else 1
    raise ValueError(f"unknown verify target {args.check!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mallows-lis",
        description="Mallows permutation models with L1/L2 distances: samplers, LIS statistics, and LLN experiments",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run a hit-and-run chain, streaming CSV observations")
    p.add_argument("--model", choices=("l1", "l2"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--thin", type=int, default=1, help="steps between emitted rows")
    p.add_argument("--start", choices=("identity", "antidiagonal"), default="identity")
    p.add_argument("--emit-perm", action="store_true", help="print the final permutation line")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("lis", help="LIS of a one-line permutation file")
    p.add_argument("--perm-file", required=True)
    p.set_defaults(func=cmd_lis)

    p = sub.add_parser("density", help="solve the limiting-density fixed point")
    p.add_argument("--model", choices=("l1", "l2"), required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", help="directory for grid.csv, diagonal.csv, density.png")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("experiment", help="run an LLN experiment from a key=value config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="lemma-level verification runs")
    vsub = p.add_subparsers(dest="check", required=True)

    v = vsub.add_parser("stationarity")
    v.add_argument("--model", choices=("l1", "l2"), required=True)
    v.add_argument("--n", type=int, default=5)
    v.add_argument("--beta", type=float, required=True)
    v.add_argument("--steps", type=int, default=1)
    v.add_argument("--trials", type=int, default=100_000)
    v.add_argument("--kernel", choices=("har", "resample"), default="har")
    v.add_argument("--sx", default="", help="resampling column set, e.g. 2,3,4")
    v.add_argument("--sy", default="", help="resampling row set")
    v.add_argument("--t0", type=float, default=0.0)
    v.add_argument("--threshold", type=float, default=0.02)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    v = vsub.add_parser("paths")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--n-max", type=int, default=60)
    v.add_argument("--t-max", type=int, default=3)
    v.add_argument("--k0-max", type=int, default=2)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    v = vsub.add_parser("local-measure")
    v.add_argument("--model", choices=("l1", "l2"), required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--betas", required=True, help="comma-separated, toward the limit")
    v.add_argument("--t0", type=int, required=True)
    v.add_argument("--K", type=float, default=2.0)
    v.add_argument("--functions", type=int, default=20)
    v.add_argument("--replicas", type=int, default=50)
    v.add_argument("--burn-in", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    v = vsub.add_parser("displacement")
    v.add_argument("--model", choices=("l1", "l2"), required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--beta", type=float, required=True)
    v.add_argument("--index", type=int, required=True)
    v.add_argument("--u", required=True, help="comma-separated tail levels")
    v.add_argument("--replicas", type=int, default=50)
    v.add_argument("--samples", type=int, default=100, help="samples per replica")
    v.add_argument("--burn-in", type=int, required=True)
    v.add_argument("--thin", type=int, required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
