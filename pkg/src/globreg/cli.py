"""Command-line front end.

Exit codes: 0 when every search certified epsilon-optimality, 2 when a budget
ran out first, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bnb import BUDGET, EPS_OPTIMAL
from .geometry import PointSet, Transform2DSimilarity, read_points
from .metrics import EvalReport, rmse, rotation_error_deg, translation_error
from .prototypes import PROTOTYPES, get_prototype
from .register import Registration, register_2d, register_3d, resolve_np
from .synth import REGIMES, SynthConfig, generate, read_truth, write_instance

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2
TRACE_HEADER = ["iter", "incumbent", "min_lb", "active", "elapsed_s"]
SWEEP_HEADER = ["regime", "level", "trial", "rmse", "runtime", "certificate", "n_p_used", "n_p_truth"]

log = logging.getLogger("globreg")


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for budget exhaustion
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=_positive_float, help="absolute optimality gap (default 1e-4 x squared target diameter)")
    p.add_argument("--max-seconds", type=_positive_float, help="wall-clock budget per search")
    p.add_argument("--max-iters", type=int, help="iteration budget per search")
    p.add_argument("--threads", type=int, default=1, help="worker threads for vertex bounds")
    p.add_argument("--no-plot", action="store_true", help="skip the figures")
    p.add_argument("--no-polish", action="store_true", help="2D only: keep incumbents at box corners, no local refits")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="globreg", description="Globally optimal point-set registration by branch and bound.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, dims in (("register2d", 2), ("register3d", 3)):
        p = sub.add_parser(name, help=f"register two {dims}D point files")
        p.add_argument("source", type=Path)
        p.add_argument("target", type=Path)
        p.add_argument("--np", dest="n_p", default="1.0", help="pair count, or a fraction of min(N, M) such as 0.9 or 1/2")
        p.add_argument("--truth", type=Path, help="truth sidecar; scores the result against it")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="unused by the deterministic solver; recorded for bookkeeping")
        _add_solver_flags(p)

    p = sub.add_parser("synth", help="generate one synthetic instance")
    p.add_argument("--prototype", default="fish", help=f"point file or built-in ({', '.join(PROTOTYPES)})")
    p.add_argument("--points", type=int, default=50, help="prototype size for built-ins")
    p.add_argument("--regime", choices=REGIMES, required=True)
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("bench", help="sweep a regime over severity levels and trials")
    p.add_argument("--prototype", default="fish", help=f"point file or built-in ({', '.join(PROTOTYPES)})")
    p.add_argument("--points", type=int, default=50, help="prototype size for built-ins")
    p.add_argument("--regime", choices=REGIMES, required=True)
    p.add_argument("--levels", type=_float_list, default=[0.0])
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--np", dest="n_p", default="1/1,1/2", help="comma-separated fractions of the true inlier count")
    p.add_argument("--seed", type=int, default=0, help="base seed; trial t at level k uses seed + 1000 k + t")
    p.add_argument("--out", type=Path, default=Path("."))
    _add_solver_flags(p)
    return parser


def _load_prototype(name: str, n: int) -> PointSet:
    if name in PROTOTYPES:
        return get_prototype(name, n)
    return read_points(name)


def write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([r.iteration, repr(r.incumbent), repr(r.min_lb), r.active, f"{r.elapsed:.6f}"])


def write_transform(path: Path, transform) -> None:
    with open(path, "w") as fh:
        if isinstance(transform, Transform2DSimilarity):
            fh.write("# theta1 theta2 theta3 theta4: x -> [[t1, -t2], [t2, t1]] x + (t3, t4)\n")
            fh.write(" ".join(repr(float(v)) for v in transform.theta) + "\n")
        else:
            fh.write("# rotation rows, then translation t: x -> R (x + t)\n")
            for row in transform.rotation:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write(" ".join(repr(float(v)) for v in transform.translation) + "\n")


def write_pairs(path: Path, pairs: np.ndarray) -> None:
    np.savetxt(path, np.asarray(pairs, dtype=np.int64).reshape(-1, 2), fmt="%d", header="source_index target_index")


def _score(reg: Registration, source: PointSet, target: PointSet, truth: Optional[dict]) -> EvalReport:
    report = EvalReport(
        rmse=rmse(reg.transform, source, target, truth["inlier_pairs"] if truth else reg.pairs),
        runtime_seconds=reg.timings["total"],
        iterations=reg.bnb.stats.iterations,
        certificate=reg.certificate,
    )
    if truth is not None and source.dim == 3:
        gt = truth["transform"]
        report.translation_error = translation_error(reg.transform.translation, gt.translation)
        report.rotation_error_deg = rotation_error_deg(reg.transform.rotation, gt.rotation)
    return report


def _register(source: PointSet, target: PointSet, n_p: int, args) -> Registration:
    kwargs = dict(
        epsilon=args.epsilon, max_iterations=args.max_iters, max_seconds=args.max_seconds, threads=args.threads
    )
    if source.dim == 2:
        return register_2d(source, target, n_p, polish=not args.no_polish, **kwargs)
    return register_3d(source, target, n_p, **kwargs)


def cmd_register(args, dims: int) -> int:
    source = read_points(args.source)
    target = read_points(args.target)
    if source.dim != dims or target.dim != dims:
        raise ValueError(f"register{dims}d needs {dims}D files, got {source.dim}D source and {target.dim}D target")
    truth = read_truth(args.truth) if args.truth else None
    n_p = resolve_np(args.n_p, len(source), len(target))
    reg = _register(source, target, n_p, args)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_transform(out / "transform.txt", reg.transform)
    write_pairs(out / "pairs.txt", reg.pairs)
    write_trace(out / "trace.csv", reg.trace)
    if not args.no_plot:
        from .plotting import plot_registration, plot_trace

        plot_trace(out / "trace.png", reg.trace)
        plot_registration(out / "registration.png", source, target, reg.transform, reg.pairs)

    for w in reg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    report = _score(reg, source, target, truth)
    timing = " ".join(f"{k}_s={v:.3f}" for k, v in reg.timings.items())
    print(f"n_p={n_p} epsilon={reg.epsilon:.6g} value={reg.value:.6g} {report.format()} {timing}")
    return EXIT_OK if reg.certificate == EPS_OPTIMAL else EXIT_BUDGET


def cmd_synth(args) -> int:
    proto = _load_prototype(args.prototype, args.points)
    inst = generate(proto, SynthConfig(args.regime, args.level, args.seed, dims=proto.dim))
    write_instance(args.out, inst)
    print(f"wrote {args.out}: {len(inst.source)} source, {len(inst.target)} target, n_p_truth={inst.n_p_truth}")
    return EXIT_OK


def run_bench(args) -> list[dict]:
    """One row per (level, trial, n_p variant), in that nesting order."""
    proto = _load_prototype(args.prototype, args.points)
    variants = [v.strip() for v in str(args.n_p).split(",") if v.strip()]
    for v in variants:
        resolve_np(v, 10**9, 10**9)  # reject malformed variants before any work
    diam = proto.diameter()
    rows = []
    for k, level in enumerate(args.levels):
        for trial in range(args.trials):
            cfg = SynthConfig(args.regime, level, args.seed + 1000 * k + trial, dims=proto.dim)
            inst = generate(proto, cfg)
            for v in variants:
                n_p = resolve_np(v, inst.n_p_truth, inst.n_p_truth)
                reg = _register(inst.source, inst.target, n_p, args)
                err = rmse(reg.transform, inst.source, inst.target, inst.inlier_pairs)
                rows.append(
                    {
                        "regime": args.regime,
                        "level": level,
                        "trial": trial,
                        "rmse": err,
                        "runtime": reg.timings["total"],
                        "certificate": reg.certificate,
                        "n_p_used": n_p,
                        "n_p_truth": inst.n_p_truth,
                        "variant": v,
                    }
                )
                log.info("level %g trial %d n_p %d: rmse %.4g (%.3g of diameter), %s", level, trial, n_p, err, err / diam, reg.certificate)
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_HEADER, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "rmse": repr(r["rmse"]), "runtime": f"{r['runtime']:.3f}"})
    if not args.no_plot and rows:
        from .plotting import plot_sweep

        plot_sweep(out / "sweep.png", rows)
    budget = sum(r["certificate"] == BUDGET for r in rows)
    print(f"wrote {out / 'sweep.csv'}: {len(rows)} rows, {budget} budget-limited")
    return EXIT_BUDGET if budget else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "register2d":
            return cmd_register(args, 2)
        if args.command == "register3d":
            return cmd_register(args, 3)
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_bench(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
