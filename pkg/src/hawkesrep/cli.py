"""Command-line entry points.

Subcommands: ``simulate`` (target spec -> event CSV + descriptor),
``represent`` (ansatz parameters and L1 discrepancy per K), ``fit``
(event CSV -> fitted parameters JSON), ``check`` (branching/stationarity
and assumption report), and ``study`` (the full simulate-fit-aggregate
experiment).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import KernelSpec, build_uniform_partition
from .infer import check_assumptions, fit_mle
from .io import (
    read_events,
    read_params,
    read_spec,
    write_events,
    write_params,
)
from .represent import build_ansatz, l1_discrepancy
from .simulate import SimConfig, simulate_target
from .stability import branching_matrix, is_stationary
from .study import load_config, run_study


def _add_simulate(sub) -> None:
    p = sub.add_parser("simulate", help="simulate a target process to an event CSV")
    p.add_argument("--spec", required=True, help="target spec JSON file")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-events", type=int, default=10_000_000)
    p.add_argument("--out", default="events.csv", help="event CSV path")


def _add_represent(sub) -> None:
    p = sub.add_parser(
        "represent", help="build ansatz parameters and measure L1 discrepancy"
    )
    p.add_argument("--spec", required=True, help="target spec JSON file")
    p.add_argument("--k", required=True, help="comma-separated component counts")
    p.add_argument("--events", help="event CSV for the discrepancy table")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--rtol", type=float, default=1e-6)


def _add_fit(sub) -> None:
    p = sub.add_parser("fit", help="maximum-likelihood fit of an event CSV")
    p.add_argument("--events", required=True, help="event CSV (descriptor sidecar)")
    p.add_argument("--k", type=int, required=True, help="component count")
    p.add_argument(
        "--kernel-convention",
        choices=("density", "unnormalized"),
        default="density",
    )
    p.add_argument(
        "--init",
        choices=("poisson", "ansatz", "file"),
        default="poisson",
        help="starting point: closed-form background split, the ansatz of "
        "--spec, or a params JSON from --init-file",
    )
    p.add_argument("--spec", help="target spec JSON (for --init ansatz)")
    p.add_argument("--init-file", help="params JSON (for --init file)")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="fit.json")


def _add_check(sub) -> None:
    p = sub.add_parser("check", help="stationarity and assumption diagnostics")
    p.add_argument("--params", required=True, help="params JSON (with partition)")
    p.add_argument("--events", help="event CSV for the assumption checks")
    p.add_argument("--out", default="report.json")


def _add_study(sub) -> None:
    p = sub.add_parser("study", help="run the simulate-fit-aggregate experiment")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--workers", type=int, help="override the config worker count")
    p.add_argument("--output-dir", help="override the config output directory")


def _cmd_simulate(args) -> int:
    spec = read_spec(args.spec)
    stream = simulate_target(
        spec, SimConfig(horizon=args.horizon, seed=args.seed, max_events=args.max_events)
    )
    events, descriptor = write_events(stream, args.out)
    print(f"wrote {stream.n} events to {events} (descriptor {descriptor})")
    return 0


def _cmd_represent(args) -> int:
    spec = read_spec(args.spec)
    ks = [int(v) for v in args.k.split(",") if v.strip()]
    if not ks:
        raise SystemExit("--k needs at least one component count")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = read_events(args.events) if args.events else None
    rows = []
    for k in ks:
        partition = build_uniform_partition(spec.space, k)
        ansatz = build_ansatz(spec, partition)
        path = out_dir / f"ansatz_K{k}.json"
        write_params(
            ansatz.params,
            path,
            partition,
            extra={
                "f_bar": ansatz.f_bar.tolist(),
                "xi_bar": ansatz.xi_bar.tolist(),
            },
        )
        print(f"wrote {path}")
        if stream is not None:
            report = l1_discrepancy(
                spec, ansatz.params, partition, stream, rtol=args.rtol
            )
            rows.append((k, report.l1, report.quadrature_nodes))
    if rows:
        table = out_dir / "discrepancy.csv"
        with open(table, "w") as fh:
            fh.write("K,l1,nodes\n")
            for k, l1, nodes in rows:
                fh.write(f"{k},{l1!r},{nodes}\n")
        print(f"wrote {table}")
    return 0


def _cmd_fit(args) -> int:
    stream = read_events(args.events)
    partition = build_uniform_partition(stream.space, args.k)
    kernel = KernelSpec(convention=args.kernel_convention)
    init = None
    if args.init == "ansatz":
        if not args.spec:
            raise SystemExit("--init ansatz requires --spec")
        init = build_ansatz(read_spec(args.spec), partition)
        kernel = init.params.kernel
    elif args.init == "file":
        if not args.init_file:
            raise SystemExit("--init file requires --init-file")
        init, _ = read_params(args.init_file)
        kernel = init.kernel
    result = fit_mle(
        partition,
        stream,
        init=init,
        kernel=kernel,
        restarts=args.restarts,
        gtol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
    )
    write_params(
        result.params,
        args.out,
        partition,
        extra={
            "loglik": result.loglik,
            "converged": result.converged,
            "iterations": result.iterations,
            "gradient_norm": result.gradient_norm,
            "runtime_s": result.runtime,
            "evaluations": result.evaluations,
            "n_events": stream.n,
        },
    )
    print(
        f"fit {stream.n} events with K={args.k}: loglik={result.loglik:.6f} "
        f"converged={result.converged} -> {args.out}"
    )
    return 0


def _cmd_check(args) -> int:
    params, partition = read_params(args.params)
    if partition is None:
        raise SystemExit("params file lacks a partition; cannot weight the cells")
    bm = branching_matrix(params, partition)
    verdict = is_stationary(params, partition)
    report = {
        "branching_matrix": bm.matrix.tolist(),
        "spectral_radius": verdict.spectral_radius,
        "verdict": verdict.verdict,
        "margin": verdict.margin,
    }
    if args.events:
        stream = read_events(args.events)
        report["assumptions"] = check_assumptions(params, partition, stream).as_dict()
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"{verdict.verdict} (spectral radius {verdict.spectral_radius:.6f}) -> {args.out}")
    return 0


def _cmd_study(args) -> int:
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    cfg = load_config(args.config, **overrides)
    result = run_study(cfg, resume=args.resume)
    state = "complete" if result.complete else "partial"
    print(f"study {state}: {len(result.rows)} rows in {result.output_dir}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "represent": _cmd_represent,
    "fit": _cmd_fit,
    "check": _cmd_check,
    "study": _cmd_study,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hawkesrep",
        description="Multivariate representations of marked Hawkes processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_represent(sub)
    _add_fit(sub)
    _add_check(sub)
    _add_study(sub)
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
