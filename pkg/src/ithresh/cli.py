"""Command-line interface.

Exit codes: 0 success, 1 argument error, 2 format error, 3 numerical error,
4 failed check (``verify`` found violations, ``check`` condition not met).
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import theorem_report, verify_trace_bounds
from .dictionaries import (
    Dictionary,
    coherence,
    format_float,
    gen_signal,
    load_matrix,
    load_signal,
    load_vector,
    save_matrix,
    save_signal,
    save_vector,
)
from .exceptions import ArgumentError, FormatError, NotDetectedError, NumericalError
from .harness import load_config, make_dictionary, parse_schedule, run_experiment
from .solvers import (
    SolverConfig,
    geometric_schedule,
    iht_solve,
    ist_fixed,
    ist_solve,
    ita_schedule_solve,
    omp_solve,
    read_trace_csv,
    write_trace_csv,
)

EXIT_OK, EXIT_ARG, EXIT_FORMAT, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3, 4

_THEOREM_IDS = {"thm1": "thm1_omp", "thm3": "thm3_iht", "thm4": "thm4_ist"}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved for format errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARG, f"{self.prog}: error: {message}\n")


def _load_dictionary(path, normalize=False):
    m = load_matrix(path)
    return Dictionary.normalized(m, "file") if normalize else Dictionary(m, "file")


def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = make_dictionary(args.ensemble, args.n, args.N, args.seed)
    sig = gen_signal(d.N, args.k, args.ratio, args.seed)
    save_matrix(out / "matrix.txt", d)
    save_signal(out / "signal.txt", sig)
    save_vector(out / "y.txt", d.matrix @ sig.to_dense())
    for name in ("matrix.txt", "signal.txt", "y.txt"):
        print(out / name)
    return EXIT_OK


def cmd_coherence(args):
    d = _load_dictionary(args.matrix, args.normalize)
    print(format_float(coherence(d)))
    return EXIT_OK


def cmd_solve(args):
    d = _load_dictionary(args.matrix)
    y = load_vector(args.y)
    truth = load_signal(args.truth) if args.truth else None
    cfg = SolverConfig(k=args.k or 0, max_iters=args.max_iters, conv_tol=args.tol,
                       record_gamma=args.record_gamma)
    algo = args.algo
    if algo in ("iht", "ist", "omp") and not args.k:
        raise ArgumentError(f"--k is required for {algo}")
    if algo == "iht":
        result = iht_solve(d, y, cfg, truth)
    elif algo == "ist":
        result = ist_solve(d, y, cfg, truth)
    elif algo == "omp":
        result = omp_solve(d, y, args.k, truth=truth)
    elif algo == "ist-fixed":
        if args.lam is None:
            raise ArgumentError("--lambda is required for ist-fixed")
        result = ist_fixed(d, y, args.lam, cfg, truth, step=args.step)
    else:
        if args.schedule is None:
            raise ArgumentError("--schedule is required for ita")
        l0, ratio, floor = parse_schedule(args.schedule)
        if l0 is None:
            l0 = max(float(np.max(np.abs(d.matrix.T @ y))), floor)
        result = ita_schedule_solve(d, y, args.mode, geometric_schedule(l0, ratio, floor),
                                    cfg, truth)
    if args.trace:
        write_trace_csv(args.trace, result)
    if args.out:
        save_vector(args.out, result.x_hat)
    support = np.flatnonzero(result.x_hat)
    print(f"status={result.status}")
    print(f"iterations={result.iterations_run}")
    print("support=[" + ", ".join(str(i) for i in support) + "]")
    if truth is not None:
        rel = np.linalg.norm(result.x_hat - truth.to_dense()) / np.linalg.norm(truth.to_dense())
        print(f"rel_error={format_float(rel)}")
    return EXIT_OK


def cmd_check(args):
    d = _load_dictionary(args.matrix)
    truth = load_signal(args.truth)
    if truth.dim != d.N:
        raise ArgumentError(f"signal dim {truth.dim} does not match N={d.N}")
    report = theorem_report(_THEOREM_IDS[args.theorem], truth, d.mu)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.coherence_ok else EXIT_CHECK


def cmd_bench(args):
    spec = load_config(args.config)
    summary, _ = run_experiment(spec, args.out, workers=args.workers)
    for key, value in summary.items():
        print(f"{key}={'' if value is None else value}")
    return EXIT_OK


def cmd_verify(args):
    steps = read_trace_csv(args.trace)
    truth = load_signal(args.truth)
    try:
        violations = verify_trace_bounds(steps, truth, args.mu, args.mode, anchor=args.anchor)
    except NotDetectedError as exc:
        print(f"not_detected: {exc}")
        return EXIT_CHECK
    for v in violations:
        print(f"violation {v.lemma} iter={v.iteration} observed={format_float(v.observed)} "
              f"bound={format_float(v.bound)}")
    print(f"violations={len(violations)}")
    return EXIT_CHECK if violations else EXIT_OK


def build_parser():
    p = _Parser(prog="ithresh", description="Iterative thresholding sparse recovery.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write matrix, signal and measurement files")
    g.add_argument("--ensemble", choices=("gaussian", "id_hadamard", "identity"),
                   default="id_hadamard")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--ratio", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("coherence", help="print the coherence of a matrix file")
    c.add_argument("matrix")
    c.add_argument("--normalize", action="store_true",
                   help="rescale columns to unit norm first")
    c.set_defaults(func=cmd_coherence)

    s = sub.add_parser("solve", help="run one recovery algorithm")
    s.add_argument("--algo", choices=("iht", "ist", "ist-fixed", "ita", "omp"), required=True)
    s.add_argument("--matrix", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--truth")
    s.add_argument("--k", type=int)
    group = s.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=float)
    group.add_argument("--schedule", help="'l0,ratio,floor'; l0 may be 'auto'")
    s.add_argument("--mode", choices=("hard", "soft"), default="hard")
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--trace")
    s.add_argument("--record-gamma", action="store_true")
    s.add_argument("--out", help="write the recovered vector here")
    s.set_defaults(func=cmd_solve)

    k = sub.add_parser("check", help="evaluate a recovery condition for a signal")
    k.add_argument("--theorem", choices=tuple(_THEOREM_IDS), required=True)
    k.add_argument("--matrix", required=True)
    k.add_argument("--truth", required=True)
    k.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run a seeded batch from a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check a trace CSV against the decay bounds")
    v.add_argument("--trace", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--mu", type=float, required=True)
    v.add_argument("--mode", choices=("hard", "soft"), required=True)
    v.add_argument("--anchor", choices=("detection", "entry"), default="detection")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if getattr(args, "N", None) is None and args.command == "gen":
        args.N = args.n if args.ensemble == "identity" else 2 * args.n
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ArgumentError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_ARG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_ARG


if __name__ == "__main__":
    sys.exit(main())
