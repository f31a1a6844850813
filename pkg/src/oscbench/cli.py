"""Command-line front end.

Commands: ``roots`` (eigenfrequencies and mode ratios), ``analytic``
(closed-form trajectory table), ``integrate`` (sequential reference plus
error report), ``bench`` (scenario matrix with CSV export) and ``verify``
(the full verification suite).

Exit codes: 0 success, 1 usage error, 2 configuration error,
3 verification failure. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    BenchRunner,
    ConfigParseError,
    ConfigValidationError,
    equal_parameter_2dof,
    export_trajectory,
    load_config,
    verify,
    write_csv,
)
from .modal import (
    analytic_solution,
    characteristic_frequencies,
    compare,
    eval_analytic,
    mode_ratios,
)
from .oscillator import NonPositiveParameterError, energy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    # Usage errors must exit 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="oscbench",
                     description="Coupled-oscillator simulator and multi-core benchmark")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("roots", help="print eigenfrequencies and mode ratios")
    p.add_argument("--m", type=float, required=True, help="mass in kg")
    p.add_argument("--c", type=float, required=True, help="spring rate in N/m")

    p = sub.add_parser("analytic", help="print the closed-form trajectory table")
    p.add_argument("--config", required=True, help="config file path")
    p.add_argument("--t-max", type=float, required=True, help="end time in s")
    p.add_argument("--samples", type=int, default=100, help="number of rows")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="config override, e.g. run.dt=1e-7")

    p = sub.add_parser("integrate", help="run the sequential reference")
    p.add_argument("--config", required=True, help="config file path")
    p.add_argument("--out", help="write the trajectory CSV here")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="config override")

    p = sub.add_parser("bench", help="run the scenario matrix and write CSV reports")
    p.add_argument("--config", required=True, help="config file path")
    p.add_argument("--out", help="report base path (default: config output)")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="config override, repeatable")

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--config", required=True, help="config file path")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="config override, repeatable")

    return parser


def _load(args):
    try:
        return load_config(args.config, getattr(args, "overrides", []))
    except FileNotFoundError:
        raise ConfigValidationError("config", f"config file not found: {args.config}")


def _cmd_roots(args) -> int:
    omega1, omega2 = characteristic_frequencies(args.m, args.c)
    r1, r2 = mode_ratios(args.m, args.c)
    print(f"omega1={omega1:.6g} omega2={omega2:.6g} r1={r1:.6f} r2={r2:.6f}")
    return EXIT_OK


def _cmd_analytic(args) -> int:
    config = _load(args)
    mc = equal_parameter_2dof(config.system)
    if mc is None:
        print("error: analytic solution requires the equal-parameter 2-DOF chain",
              file=sys.stderr)
        return EXIT_CONFIG
    if args.t_max < 0 or args.samples < 1:
        print("error: need t-max >= 0 and samples >= 1", file=sys.stderr)
        return EXIT_USAGE
    sol = analytic_solution(mc[0], mc[1], config.x0, config.v0)
    print("t_s,x1_m,x2_m")
    n = args.samples
    for i in range(n):
        t = args.t_max * i / (n - 1) if n > 1 else 0.0
        x1, x2 = eval_analytic(sol, t)
        print(f"{t:.9g},{x1:.9g},{x2:.9g}")
    return EXIT_OK


def _cmd_integrate(args) -> int:
    config = _load(args)
    runner = BenchRunner(config)
    traj = runner.reference(config.dt, config.nsteps, config.stride)
    if runner.analytic is not None:
        report = compare(traj, runner.analytic)
        print(f"max_abs_err_m={report.max_abs_error:.6e} "
              f"rmse_m={report.rmse:.6e} at_time_s={report.at_time:.9g}")
    else:
        e0 = energy(config.system, traj.samples[0])
        deltas = [abs(energy(config.system, s) - e0) for s in traj.samples]
        drift = (max(deltas) / e0) if e0 > 0 else max(deltas)
        print(f"energy_drift_rel={drift:.6e} (no analytic oracle for this system)")
    if args.out:
        export_trajectory(traj, args.out)
        print(f"trajectory written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _load(args)
    out = args.out or config.output
    runner = BenchRunner(config)
    results = runner.run_all()
    summary_path, samples_path = write_csv(results, out)

    header = (f"{'scenario':<18} {'workers':>7} {'determ':>6} {'max_err_m':>11} "
              f"{'p50_step_s':>11} {'p99_step_s':>11} {'migrations':>10}")
    print(header)
    for r in results:
        err = "-" if r.max_abs_err is None else f"{r.max_abs_err:.3e}"
        print(f"{r.name:<18} {len(r.worker_stats):>7} "
              f"{'pass' if r.determinism else 'FAIL':>6} {err:>11} "
              f"{r.pooled.p50:>11.3e} {r.pooled.p99:>11.3e} "
              f"{r.migration.total_migrations:>10}")
    by_name = {r.name: r for r in results}
    if "par-pin-padded" in by_name and "par-pin-packed" in by_name:
        padded = by_name["par-pin-padded"].pooled.p50
        packed = by_name["par-pin-packed"].pooled.p50
        if packed > 0:
            print(f"p50 ratio padded/packed = {padded / packed:.3f} (report-only)")
    print(f"summary: {summary_path}")
    print(f"samples: {samples_path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    config = _load(args)
    report = verify(config)
    width = max(len(item.name) for item in report.items)
    for item in report.items:
        line = f"{item.status.upper():<4} {item.name:<{width}} {item.measured}"
        if item.detail:
            line += f"  ({item.detail})"
        print(line)
    failed = [i.name for i in report.items if i.status == "fail"]
    skipped = sum(1 for i in report.items if i.status == "skip")
    print(f"verify: {len(report.items) - len(failed) - skipped} passed, "
          f"{len(failed)} failed, {skipped} skipped")
    if failed:
        print(f"failed items: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


_COMMANDS = {
    "roots": _cmd_roots,
    "analytic": _cmd_analytic,
    "integrate": _cmd_integrate,
    "bench": _cmd_bench,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigParseError, ConfigValidationError, NonPositiveParameterError) as exc:
        print(f"oscbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"oscbench: i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("oscbench: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
