"""``ztcm`` command line.

Exit codes: 0 success, 1 configuration error, 2 data validation failure,
3 numerical failure. Failures print a one-line JSON error report to stderr
and, when an output directory is known, also write it to ``error.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from ztcm import __version__
from ztcm.errors import ConfigError, DataValidationError, NumericalError, RankDeficiencyError, ZtcmError
from ztcm.geometry import ROUNDED_PI, build_spot_table, read_spots_csv
from ztcm.pipeline import (
    OUTPUT_DIR_ENV,
    fit_report_text,
    load_config,
    run_pipeline,
    write_spot_outputs,
    write_valuation_outputs,
)
from ztcm.profiling import parse_profile_blocks
from ztcm.reports import format_table, write_json
from ztcm.synthgen import default_scenario, load_scenario, monte_carlo_recovery
from ztcm.valuation import DEFAULT_EXCHANGE_RATE, allocate_spot_values, build_valuation_report, convert_currency

logger = logging.getLogger("ztcm")


def _error_report(exc: BaseException, code: int) -> dict:
    report = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    if isinstance(exc, RankDeficiencyError):
        report["columns"] = exc.columns
    return report


def _output_dir(arg: str | None) -> Path | None:
    if arg:
        return Path(arg)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else None


# -- subcommands -------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "output_dir": args.output_dir,
        "exchange_rate": args.exchange_rate,
        "cov_type": args.cov_type,
        "total_annual_visits": args.total_annual_visits,
        "threshold": args.threshold,
        "total_visits": args.total_visits,
        "visitation_scale": args.visitation_scale,
        "seed": args.seed,
    }
    config = load_config(args.config, overrides)
    args._out = config.output_dir
    result = run_pipeline(config)
    print(fit_report_text(result.fit))
    print((Path(config.output_dir) / "valuation.txt").read_text(encoding="utf-8"))
    if result.spots is not None:
        print((Path(config.output_dir) / "spots.txt").read_text(encoding="utf-8"))
    print(f"reports written to {config.output_dir}")
    return 0


def _read_value_zones(path: Path) -> list[tuple[str, float, float]]:
    if not path.is_file():
        raise ConfigError(f"zones file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"zone_id", "travel_cost", "visits"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataValidationError(f"{path}: header must contain zone_id, travel_cost, visits")
        try:
            return [(r["zone_id"], float(r["travel_cost"]), float(r["visits"])) for r in reader]
        except ValueError as exc:
            raise DataValidationError(f"{path}:{reader.line_num}: {exc}") from None


def cmd_value_only(args: argparse.Namespace) -> int:
    zones = _read_value_zones(Path(args.zones))
    spots = None
    if args.spots:
        if not Path(args.spots).is_file():
            raise ConfigError(f"spots file not found: {args.spots}")
        spots = build_spot_table(read_spots_csv(args.spots))
    if not args.slope > 0:
        raise ConfigError("--slope must be positive (magnitude of the travel-cost coefficient)")
    report = build_valuation_report(
        zones,
        args.slope,
        exchange_rate=args.exchange_rate,
        total_visits=args.total_visits,
        area_ha=spots.total_ha if spots else None,
    )
    out = _output_dir(args.output_dir)
    args._out = out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_valuation_outputs(out, report)
        write_json(out / "summary.json", report.summary() | {"units": {"visits": "as supplied", "slope_b": "visits per BDT"}})
        if spots is not None:
            write_spot_outputs(out, spots, report.total_value_bdt, args.exchange_rate)
    rows = [[z.zone_id, z.travel_cost, z.visits, z.choke_price, z.twtp] for z in report.zones]
    print(format_table(["Zone", "Travel cost", "Visits", "Choke price", "CS (BDT)"], rows, digits=1, title=f"Valuation at slope b = {args.slope:g}"))
    print(f"Total: BDT {report.total_value_bdt:,.1f} (USD {report.total_value_usd:,.2f})")
    return 0


def cmd_spots(args: argparse.Namespace) -> int:
    path = Path(args.spots)
    if not path.is_file():
        raise ConfigError(f"spots file not found: {path}")
    table = build_spot_table(read_spots_csv(path), ROUNDED_PI if args.pi == "rounded" else math.pi)
    values = allocate_spot_values(args.total_usd, list(table.spots)) if (args.total_usd is not None and table.spots) else None
    header = ["Spot", "Compartment", "Distance (km)", "Area (km2)", "Area (ha)"]
    rows = [[s.name, s.compartment_no, s.walk_distance_km, s.area_km2, s.area_ha] for s in table.spots]
    total = ["Total", "-", table.total_distance_km, table.total_km2, table.total_ha]
    if values is not None:
        header.append("Value")
        rows = [r + [v] for r, v in zip(rows, values)]
        total.append(args.total_usd)
    print(format_table(header, rows + [total], digits=1))
    out = _output_dir(args.output_dir)
    args._out = out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        rate = args.exchange_rate
        write_spot_outputs(out, table, (args.total_usd or 0.0) * rate, rate)
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    path = Path(args.blocks)
    if not path.is_file():
        raise ConfigError(f"profile file not found: {path}")
    try:
        blocks = parse_profile_blocks(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataValidationError(f"{path}: {exc}") from None
    results = []
    for b in blocks:
        r = b.run()
        results.append({"name": b.name, "test": "chi2" if b.kind == "table" else "anova_F", "statistic": r.statistic,
                        "df": list(r.df), "p": r.p, "degenerate": r.degenerate})
    rows = [[r["name"], r["test"], r["statistic"], "/".join(map(str, r["df"])), r["p"]] for r in results]
    print(format_table(["Variable", "Test", "Statistic", "df", "p"], rows, digits=4))
    if args.json:
        write_json(args.json, results)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = load_scenario(args.scenario) if args.scenario else default_scenario()
    changes = {k: v for k, v in {"seed": args.seed, "n_obs": args.n_obs, "noise_sd": args.noise_sd}.items() if v is not None}
    if changes:
        spec = spec.with_(**changes)
    report = monte_carlo_recovery(spec, args.reps, workers=args.workers)
    data = report.to_dict()
    if args.output:
        write_json(args.output, data)
    print(json.dumps({k: v for k, v in data.items() if k != "spec"}, indent=2))
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ztcm", description="Zonal travel cost valuation of recreation sites.")
    p.add_argument("--version", action="version", version=f"ztcm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="full pipeline from a config file")
    r.add_argument("--config", required=True, help="flat key = value config file")
    r.add_argument("--output-dir")
    r.add_argument("--exchange-rate", type=float)
    r.add_argument("--cov-type", choices=["HC0", "HC1"])
    r.add_argument("--total-annual-visits", type=float)
    r.add_argument("--threshold", help="'min' (per-zone minimum respondent income) or a BDT amount")
    r.add_argument("--total-visits", type=float, help="visit count for mean CS per visit")
    r.add_argument("--visitation-scale", type=float)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("value-only", help="value zones with a user-supplied slope (no regression)")
    v.add_argument("--slope", type=float, required=True, help="|travel-cost coefficient|, visits per BDT")
    v.add_argument("--zones", required=True, help="CSV with zone_id, travel_cost, visits")
    v.add_argument("--spots", help="spots CSV for value per hectare")
    v.add_argument("--total-visits", type=float)
    v.add_argument("--exchange-rate", type=float, default=DEFAULT_EXCHANGE_RATE)
    v.add_argument("--output-dir")
    v.set_defaults(func=cmd_value_only)

    s = sub.add_parser("spots", help="half-circle spot areas and optional value allocation")
    s.add_argument("spots", help="CSV with name, compartment_no, walk_distance_km")
    s.add_argument("--total-usd", type=float, help="total value to allocate by area")
    s.add_argument("--pi", choices=["rounded", "exact"], default="rounded")
    s.add_argument("--exchange-rate", type=float, default=DEFAULT_EXCHANGE_RATE)
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_spots)

    pr = sub.add_parser("profile", help="chi-square / ANOVA tests from CSV blocks")
    pr.add_argument("blocks", help="file with [table NAME] / [anova NAME] CSV blocks")
    pr.add_argument("--json", help="also write results as JSON")
    pr.set_defaults(func=cmd_profile)

    m = sub.add_parser("simulate", help="Monte Carlo recovery of the estimator")
    m.add_argument("--scenario", help="scenario JSON file (defaults built in)")
    m.add_argument("--reps", type=int, default=1000)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--seed", type=int)
    m.add_argument("--n-obs", type=int)
    m.add_argument("--noise-sd", type=float)
    m.add_argument("--output", help="write the report JSON here")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args._out = None
    try:
        return args.func(args)
    except ZtcmError as exc:
        err, code = exc, exc.exit_code
    except FileNotFoundError as exc:
        err, code = exc, ConfigError.exit_code
    except ValueError as exc:
        err, code = exc, DataValidationError.exit_code
    except ArithmeticError as exc:
        err, code = exc, NumericalError.exit_code
    report = _error_report(err, code)
    print(json.dumps(report), file=sys.stderr)
    if args._out is not None:
        try:
            Path(args._out).mkdir(parents=True, exist_ok=True)
            write_json(Path(args._out) / "error.json", report)
        except OSError:
            pass
    return code


if __name__ == "__main__":
    raise SystemExit(main())
