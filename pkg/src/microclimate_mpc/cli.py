"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .controllers import CONTROLLERS, make_controller
from .errors import ConvergenceError, DataError, DomainError, SolverError
from .harness import (
    DisturbanceSpec,
    compare_controllers,
    default_controllers,
    horizon_study,
    mean_by_controller,
    rolling_run,
    uncertainty_study,
)
from .scenarios import DAY_TYPES, export_run, resolve_scenario

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("microclimate_mpc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _horizon_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("horizons must be positive integers")
    return values


def build_parser():
    parser = _Parser(prog="microclimate-mpc", description="Microclimate control simulations.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, day_default="cold"):
        p.add_argument("--scenario", required=True, help="tc1, tc2, tc2_svs or a JSON config path")
        p.add_argument("--day", choices=DAY_TYPES, default=day_default, help="day type for built-in scenarios")
        p.add_argument("--out", required=True, type=Path, help="output directory")

    p = sub.add_parser("simulate", help="closed-loop run of one controller")
    common(p)
    p.add_argument("--controller", choices=sorted(CONTROLLERS), required=True)
    p.add_argument("--replan", type=float, default=3600.0, help="replan interval [s], 300..3600")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--disturb", action="store_true", help="perturb measurements and forecasts")

    p = sub.add_parser("compare", help="all controllers on one scenario")
    common(p)
    p.add_argument("--replan", type=float, default=3600.0)

    p = sub.add_parser("horizon-study", help="nonlinear MPC with fixed planning windows")
    common(p)
    p.add_argument("--wmax-kw", type=float, default=None, help="override the heating power cap [kW]")
    p.add_argument("--horizons", type=_horizon_list, default=[2, 3, 4, 6, 24], help="window lengths [h]")

    p = sub.add_parser("uncertainty-study", help="MPC vs LMPC under perturbed inputs")
    common(p, day_default="mild")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--replan", type=float, default=360.0)
    return parser


def _write_rows(path: Path, rows):
    keys = list(dict.fromkeys(k for r in rows for k in r))
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def cmd_simulate(args, scenario):
    dist = DisturbanceSpec(seed=args.seed) if args.disturb else None
    res = rolling_run(scenario, make_controller(args.controller), args.replan, dist)
    export_run(res, args.out, scenario.exo, scenario.comfort)
    s = res.summary()
    print(f"{s['controller']}: {s['total_kWh']:.3f} kWh, penalty {s['penalty_Kh']:.3f} K h, "
          f"max CO2 {s['max_co2_ppm']:.0f} ppm -> {args.out}")


def cmd_compare(args, scenario):
    rows, results = compare_controllers(scenario, default_controllers(), args.replan)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, res in results.items():
        export_run(res, args.out / name, scenario.exo, scenario.comfort)
    _write_rows(args.out / "summary.csv", rows)
    for r in rows:
        if r["failed"]:
            print(f"{r['controller']:>6}: FAILED ({r['error']})")
        else:
            print(f"{r['controller']:>6}: heat/cool {r['heat_cool_kWh']:8.3f} kWh  vent {r['ventilation_kWh']:8.3f} kWh"
                  f"  penalty {r['penalty_Kh']:7.3f} K h  max CO2 {r['max_co2_ppm']:6.0f} ppm")
    if any(r["failed"] for r in rows):
        raise SolverError("at least one controller failed")


def cmd_horizon(args, scenario):
    if args.wmax_kw is not None:
        scenario = scenario.with_params(W_max=args.wmax_kw * 1000.0)
    rows = horizon_study(scenario, args.horizons)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_rows(args.out / "horizons.csv", rows)
    for r in rows:
        print(f"horizon {r['horizon_h']:3d} h: objective {r['objective_Wh'] / 1000:10.3f} kWh-eq, "
              f"penalty {r['penalty_Kh']:.3f} K h")


def cmd_uncertainty(args, scenario):
    if args.seeds < 1:
        raise DomainError("--seeds must be >= 1")
    rows = uncertainty_study(scenario, args.seeds, args.replan)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_rows(args.out / "seeds.csv", rows)
    summary = {
        "mean_penalty_Kh": mean_by_controller(rows, "penalty_Kh"),
        "mean_total_kWh": mean_by_controller(rows, "total_kWh"),
        "seeds": args.seeds,
        "replan_s": args.replan,
    }
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, pen in summary["mean_penalty_Kh"].items():
        print(f"{name:>5}: mean penalty {pen:.3f} K h, mean energy {summary['mean_total_kWh'][name]:.3f} kWh")


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "horizon-study": cmd_horizon,
    "uncertainty-study": cmd_uncertainty,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scenario = resolve_scenario(args.scenario, args.day)
        COMMANDS[args.command](args, scenario)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
