"""Command-line front end.

Subcommands:
  sweep        run a Monte-Carlo sweep and write a results CSV
  bars         before/after sum rates (estimated vs true channel)
  power-alloc  per-user power fractions at one transmit power
  slopes       high-SNR slopes from a results CSV
  bench        per-algorithm mean solve times

Exit codes: 0 on success, 1 for configuration errors, 2 when a run exceeds
the solver-degeneracy threshold or fails at runtime.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .harness import ConfigError


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fdd-precoding", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte-Carlo sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--plot-data", default=None, help="optional plot-data path")

    bars = sub.add_parser("bars", help="before/after optimization report")
    bars.add_argument("--config", required=True)

    alloc = sub.add_parser("power-alloc", help="per-user power fractions")
    alloc.add_argument("--config", required=True)
    alloc.add_argument("--power-db", required=True, type=float)

    slopes = sub.add_parser("slopes", help="high-SNR slopes from a CSV")
    slopes.add_argument("--in", dest="infile", required=True)
    slopes.add_argument("--window", required=True, help="dB window, e.g. 30,40")

    bench = sub.add_parser("bench", help="runtime benchmark")
    bench.add_argument("--config", required=True)
    return parser


def _cmd_sweep(args) -> int:
    spec = harness.load_spec(args.config)
    records = harness.run_sweep(spec)
    harness.write_results(records, args.out)
    if args.plot_data:
        harness.emit_plot_data(records, args.plot_data)
    degenerate = sum(1 for r in records if sum(r.per_user_power_fractions) < 0.5)
    print(f"wrote {len(records)} records to {args.out}")
    if degenerate > spec.degeneracy_threshold * len(records):
        print(f"degenerate solves: {degenerate}/{len(records)} exceeds threshold",
              file=sys.stderr)
        return 2
    return 0


def _cmd_bars(args) -> int:
    spec = harness.load_spec(args.config)
    print(f"{'algorithm':28s} {'est before':>11s} {'est after':>11s} "
          f"{'true before':>11s} {'true after':>11s}")
    for algorithm in spec.algorithms:
        rep = harness.before_after_report(spec, algorithm)
        print(f"{algorithm:28s} {rep.sr_est_before:11.3f} {rep.sr_est_after:11.3f} "
              f"{rep.sr_true_before:11.3f} {rep.sr_true_after:11.3f}")
    return 0


def _cmd_power_alloc(args) -> int:
    spec = harness.load_spec(args.config)
    T_dl = spec.T_dl_grid[0]
    for algorithm in spec.algorithms:
        fractions = harness.power_allocation_report(spec, algorithm, args.power_db)
        mean = fractions.mean(axis=0)
        active = (fractions > 0.01).sum(axis=1)
        share = float(np.mean(active <= T_dl))
        print(f"{algorithm}: mean power fractions "
              + " ".join(f"{x:.4f}" for x in mean))
        print(f"{algorithm}: instances with <= {T_dl} active users: {share:.0%}")
    return 0


def _cmd_slopes(args) -> int:
    try:
        lo, hi = (float(x) for x in args.window.split(","))
    except ValueError:
        raise ConfigError(f"--window expects 'db1,db2', got {args.window!r}") from None
    records = harness.read_results(args.infile)
    pairs = sorted({(r.algorithm, r.T_dl) for r in records})
    for algorithm, T_dl in pairs:
        slope = harness.high_snr_slope(records, algorithm, T_dl, (lo, hi))
        print(f"{algorithm:28s} T_dl={T_dl:3d}  slope {slope:.3f} bits/doubling")
    return 0


def _cmd_bench(args) -> int:
    spec = harness.load_spec(args.config)
    table = harness.runtime_benchmark(spec)
    for algorithm, mean_us in sorted(table.items()):
        print(f"{algorithm:28s} {mean_us / 1e3:10.2f} ms/solve")
    return 0


_COMMANDS = {
    "sweep": _cmd_sweep,
    "bars": _cmd_bars,
    "power-alloc": _cmd_power_alloc,
    "slopes": _cmd_slopes,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
