"""Command line interface.

Numerical submodules are imported inside the command handlers so that
``--threads`` can pin the BLAS thread count through environment variables
before anything loads numpy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

EXIT_OK = 0
EXIT_ABOVE_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_UNCONVERGED = 3
EXIT_FAILURE = 4

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_spectrum(path, eigenvalues, residuals) -> None:
    lines = ["index,eigenvalue,residual"]
    for i, (ev, res) in enumerate(zip(eigenvalues, residuals)):
        lines.append(f"{i},{_fmt(ev)},{_fmt(res)}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_spectrum(path):
    values = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("index,eigenvalue"):
            raise ValueError(f"{path} is not a spectrum file")
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line.split(",")[1]))
    return values


def _write_trace(path, rows, timings: bool) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in rows:
            if not timings:
                row = dict(row, wall_ms=None)
            fh.write(json.dumps(row, sort_keys=True,
                                separators=(",", ":")) + "\n")


def _run_solve(run, timings=False):
    """Build the configured operator and run the iteration."""
    from .config import build_operator, build_preconditioner
    from .solver import riemannian_lobpcg
    from .models import product_state_block

    h = build_operator(run)
    precond = build_preconditioner(run)
    x0 = product_state_block(run.model, run.solver.b)
    return riemannian_lobpcg(h, run.solver, x0=x0, precond=precond)


def cmd_solve(args) -> int:
    from .config import ConfigError, load_config
    from .container import save_checkpoint
    from .solver import SolverError

    try:
        run = load_config(args.config, seed=args.seed, tol=args.tol,
                          out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(run.out_dir, exist_ok=True)
    try:
        result = _run_solve(run, timings=args.timings)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write_spectrum(os.path.join(run.out_dir, "spectrum.csv"),
                    result.eigenvalues, result.residuals)
    _write_trace(os.path.join(run.out_dir, "trace.jsonl"), result.trace,
                 timings=args.timings)
    state = result.state
    save_checkpoint(os.path.join(run.out_dir, "checkpoint.bin"),
                    iteration=state.iteration, t_index=state.t_index,
                    phase1_done=state.phase1_done, rayleigh=state.rayleigh,
                    rayleigh_prev=state.rayleigh_prev,
                    xs=state.xs, ps=state.ps)
    status = "converged" if result.converged else "max-iters"
    print(f"{status} after {result.iterations} iterations")
    for i, ev in enumerate(result.eigenvalues):
        print(f"  ev[{i}] = {_fmt(ev)}  residual = {_fmt(result.residuals[i])}")
    return EXIT_OK if result.converged else EXIT_UNCONVERGED


def cmd_oracle(args) -> int:
    from .config import ConfigError, load_config

    try:
        run = load_config(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    import numpy as np
    from .models import dense_operator
    from .oracle import dense_eigs

    try:
        a = dense_operator(run.model)
        vals, vecs = dense_eigs(a, run.solver.b)
    except ValueError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    residuals = [float(np.linalg.norm(a @ vecs[:, i] - vals[i] * vecs[:, i]))
                 for i in range(len(vals))]
    os.makedirs(run.out_dir, exist_ok=True)
    _write_spectrum(os.path.join(run.out_dir, "oracle_spectrum.csv"),
                    vals, residuals)
    for i, ev in enumerate(vals):
        print(f"  ev[{i}] = {_fmt(ev)}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        got = _read_spectrum(args.spectrum)
        want = _read_spectrum(args.reference)
    except (OSError, ValueError) as exc:
        print(f"cannot read spectra: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if len(got) != len(want):
        print(f"length mismatch: {len(got)} vs {len(want)}", file=sys.stderr)
        return EXIT_FAILURE
    mae = sum(abs(g - w) for g, w in zip(got, want)) / len(got)
    print(f"mae = {_fmt(mae)}  threshold = {_fmt(args.threshold)}")
    return EXIT_OK if mae <= args.threshold else EXIT_ABOVE_THRESHOLD


def cmd_schedule_study(args) -> int:
    from dataclasses import replace

    from .config import ConfigError, load_config

    try:
        run = load_config(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(run.out_dir, exist_ok=True)
    strategies = args.strategies.split(",") if args.strategies \
        else ["argmax", "first_only", "random"]
    worst = EXIT_OK
    for strategy in strategies:
        study = replace(run, solver=replace(run.solver, schedule=strategy))
        try:
            result = _run_solve(study)
        except Exception as exc:  # surface which strategy failed
            print(f"{strategy}: failure: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        _write_trace(os.path.join(run.out_dir, f"trace_{strategy}.jsonl"),
                     result.trace, timings=False)
        finals = result.trace[-1]["rayleigh"]
        lines = ["iter,ev_index,abs_err"]
        for row in result.trace:
            for i, value in enumerate(row["rayleigh"]):
                lines.append(f"{row['iter']},{i},{_fmt(abs(value - finals[i]))}")
        curve_path = os.path.join(run.out_dir, f"curves_{strategy}.csv")
        with open(curve_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        status = "converged" if result.converged else "max-iters"
        print(f"{strategy}: {status} after {result.iterations} iterations, "
              f"max residual = {_fmt(max(result.residuals))}")
        if not result.converged:
            worst = EXIT_UNCONVERGED
    return worst


def cmd_bench(args) -> int:
    from .config import ConfigError, load_config

    try:
        run = load_config(args.config, seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(run.out_dir, exist_ok=True)
    tic = time.perf_counter()
    result = _run_solve(run)
    wall = time.perf_counter() - tic
    report = {
        "wall_seconds": wall,
        "iterations": result.iterations,
        "converged": result.converged,
        "per_iteration_ms": (wall * 1000.0 / max(result.iterations, 1)),
        "b": run.solver.b,
        "rank": run.solver.rank,
        "schedule": run.solver.schedule,
    }
    with open(os.path.join(run.out_dir, "bench.json"), "w",
              encoding="ascii", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wall = {wall:.3f} s over {result.iterations} iterations")
    return EXIT_OK if result.converged else EXIT_UNCONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tteig",
        description="Tensor-train block eigensolver for symmetric operators")
    parser.add_argument("--threads", type=int, default=None,
                        help="pin BLAS to this many threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("solve", help="run the block eigensolver")
    common(p)
    p.add_argument("--tol", type=float, default=None,
                   help="override the configured tolerance")
    p.add_argument("--timings", action="store_true",
                   help="record wall-clock times in the trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="dense reference spectrum")
    common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", help="mean absolute error between spectra")
    p.add_argument("spectrum", help="computed spectrum.csv")
    p.add_argument("reference", help="reference spectrum.csv")
    p.add_argument("--threshold", type=float, default=1e-7)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("schedule-study",
                       help="run several column schedules and dump curves")
    common(p)
    p.add_argument("--strategies", default=None,
                   help="comma-separated schedule names")
    p.set_defaults(func=cmd_schedule_study)

    p = sub.add_parser("bench", help="time one solve")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be positive")
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
