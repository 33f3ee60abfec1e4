"""Command line entry point: ``logbessel-bench <subcommand> [options]``."""
from __future__ import annotations

import argparse
import sys

from . import bench
from .batch import CONCURRENT, LOCKSTEP
from .bracket import ZeroFindConfig
from .integrand import DomainError
from .oracle import MissingReference, SelfCheckFailed
from .quadrature import QuadratureConfig

EXIT_OK, EXIT_CONFIG, EXIT_COVERAGE, EXIT_SELF_CHECK = 0, 2, 3, 4
DEFAULT_REFERENCE = "tests/data/reference_100x33.tsv"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_grid(p):
    d = bench.GridSpec()
    p.add_argument("--v-min", type=float, default=d.v_min)
    p.add_argument("--v-max", type=float, default=d.v_max)
    p.add_argument("--v-count", type=int, default=d.v_count)
    p.add_argument("--x-min", type=float, default=d.x_min)
    p.add_argument("--x-max", type=float, default=d.x_max)
    p.add_argument("--x-count", type=int, default=d.x_count, help="x is log-spaced")


def _add_common(p, reference=True):
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--bins", type=int, default=128, help="trapezoid bins")
    if reference:
        p.add_argument("--reference", default=DEFAULT_REFERENCE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logbessel-bench", description="Benchmarks for log K_v(x).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("accuracy", help="error metric per cell and method")
    _add_grid(p)
    _add_common(p)
    p.add_argument("--methods", default=",".join(bench.ALL_METHODS))
    p.add_argument("--precision", type=int, choices=(32, 64), default=64)

    p = sub.add_parser("regions", help="most accurate and fastest baseline per cell")
    _add_grid(p)
    _add_common(p)

    p = sub.add_parser("scaling", help="batch time and work against batch size")
    _add_common(p, reference=False)
    p.add_argument("--sizes", default="1,10,100,1000,10000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=(LOCKSTEP, CONCURRENT), default=LOCKSTEP)

    p = sub.add_parser("gen-reference", help="tabulate the arbitrary-precision oracle")
    _add_grid(p)
    p.add_argument("--out", default=DEFAULT_REFERENCE)
    p.add_argument("--digits", type=int, default=50)
    p.add_argument("--bins", type=int, default=10**6, help="cap on oracle trapezoid bins")
    p.add_argument("--no-derivatives", action="store_true")

    p = sub.add_parser("deriv-accuracy", help="error of d/dv and d/dx log K per cell")
    _add_grid(p)
    _add_common(p)
    return parser


def _grid(args, methods=bench.ALL_METHODS):
    return bench.GridSpec(args.v_min, args.v_max, args.v_count,
                          args.x_min, args.x_max, args.x_count, tuple(methods))


def _emit(report, out):
    text = bench.write_csv(report, out)
    if out is None:
        sys.stdout.write(text)


def _run(args) -> int:
    if args.command == "gen-reference":
        rows = bench.gen_reference(_grid(args), args.out, args.digits, args.bins,
                                   derivatives=not args.no_derivatives)
        print(f"wrote {rows} rows to {args.out}", file=sys.stderr)
        return EXIT_OK
    cfg = QuadratureConfig(args.bins, ZeroFindConfig())
    if args.command == "accuracy":
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        report = bench.run_accuracy(_grid(args, methods), args.reference, cfg, args.precision)
    elif args.command == "regions":
        report = bench.run_regions(_grid(args), args.reference)
    elif args.command == "deriv-accuracy":
        report = bench.run_deriv_accuracy(_grid(args), args.reference, cfg)
    else:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        report = bench.run_scaling(sizes, args.seed, args.backend, cfg=cfg)
    _emit(report, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except MissingReference as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except SelfCheckFailed as exc:
        print(f"error: oracle self-check failed: {exc}", file=sys.stderr)
        return EXIT_SELF_CHECK
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
