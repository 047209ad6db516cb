"""Command-line front end: ``fdelectro {poisson,pb,convergence}``.

Exit status is 0 on success, 2 when a solve stops without converging and 64
on a usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import RateTable, run_convergence_study, solve_case, write_study_csv, write_trace_csv
from .poisson import SolveOptions

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 64

DEFAULT_NS = {1: [8, 16, 32, 64], 2: [8, 16, 32, 64], 3: [8, 16, 32]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _positive_float(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdelectro", description="Local relaxation solvers for periodic electrostatics.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=1e-10, help="stopping tolerance on |eta| and |zeta|")
    common.add_argument("--max-sweeps", type=_positive_int, default=None)
    common.add_argument("--n-local", type=_positive_int, default=5, help="sweeps between global shifts")
    common.add_argument("--shift", type=_on_off, default=None,
                        help="global shift on|off (default: on for variable permittivity)")
    common.add_argument("--interleave", type=_on_off, default=True,
                        help="interleave face updates in the PB sweep (default on)")
    common.add_argument("--out", help="study CSV path")

    for name, tests, helptext in (("poisson", (1, 2), "solve Test 1 or 2 with face updates"),
                                  ("pb", (3,), "solve Test 3 with ion-transfer updates")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--test", type=int, choices=tests, default=tests[0])
        p.add_argument("--n", type=_positive_int, default=16, help="cells per axis")
        p.add_argument("--trace", help="per-sweep CSV path")

    p = sub.add_parser("convergence", parents=[common], help="grid-refinement study")
    p.add_argument("--test", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--n", type=_positive_int, nargs="+", default=None, help="grid sizes (default per test)")
    return parser


def _options(args) -> SolveOptions:
    return SolveOptions(tol_eta=args.tol, max_sweeps=args.max_sweeps, n_local=args.n_local,
                        use_shift=args.shift)


def _print_record(rec) -> None:
    vals = " ".join(f"{k}={v:.6e}" for k, v in rec.values().items())
    flag = "" if rec.converged else " (not converged)"
    print(f"N={rec.n} h={rec.h:.6g} sweeps={rec.sweeps} time={rec.wall_time:.2f}s {vals}{flag}")


def _run_single(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    _, report, rec = solve_case(args.test, args.n, _options(args), interleave=args.interleave)
    _print_record(rec)
    if args.trace:
        write_trace_csv(report, args.trace, pb=args.command == "pb")
    if args.out:
        write_study_csv(RateTable([rec]), args.out)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _run_convergence(args) -> int:
    ns = args.n or DEFAULT_NS[args.test]
    if len(ns) < 2 or len(set(ns)) != len(ns) or min(ns) < 4:
        raise UsageError("--n needs at least two distinct grid sizes, each >= 4")
    table = run_convergence_study(args.test, ns, _options(args), interleave=args.interleave, out=args.out)
    for rec in table.records:
        _print_record(rec)
    for col in table.columns:
        orders = " ".join(f"{o:.3f}" for o in table.orders(col))
        print(f"order {col}: {orders}")
    return EXIT_OK if table.all_converged else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "convergence":
            return _run_convergence(args)
        return _run_single(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fdelectro: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
