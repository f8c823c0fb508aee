"""End-to-end valuation run: survey -> zones -> regression -> values -> reports."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import logging
import math
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from ztcm import __version__
from ztcm.errors import ConfigError, DataValidationError, NumericalError
from ztcm.geometry import ROUNDED_PI, SpotTable, build_spot_table, read_spots_csv
from ztcm.regression import VGF_COLUMNS, OlsFit, fit_ols
from ztcm.reports import format_table, write_csv, write_json, write_text
from ztcm.survey import Purpose, filter_tourists, parse_survey_csv
from ztcm.valuation import (
    DEFAULT_EXCHANGE_RATE,
    DemandSlope,
    ValuationReport,
    allocate_spot_values,
    build_valuation_report,
    convert_currency,
    demand_curve_points,
)
from ztcm.zoning import (
    VISITATION_SCALE,
    ObservationRow,
    ZoneRecord,
    build_observation_rows,
    build_zone_table,
    design_from_rows,
    read_income_csv,
    read_zones_csv,
)

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "ZTCM_OUTPUT_DIR"

_PATH_KEYS = ("survey", "zones", "income", "spots")


@dataclass(frozen=True)
class RunConfig:
    survey: Path
    zones: Path
    income: Path
    spots: Path | None = None
    total_annual_visits: float | None = None
    threshold: str = "min"  # "min" or a BDT amount
    exchange_rate: float = DEFAULT_EXCHANGE_RATE
    cov_type: str = "HC1"
    visitation_scale: float = VISITATION_SCALE
    output_dir: Path = Path("ztcm-out")
    seed: int = 0
    total_visits: float | None = None
    purposes: tuple[str, ...] = ("recreation", "study", "business")
    pi: str = "rounded"

    def __post_init__(self) -> None:
        if not self.exchange_rate > 0:
            raise ConfigError("exchange_rate must be positive")
        if self.cov_type not in ("HC0", "HC1"):
            raise ConfigError("cov_type must be HC0 or HC1")
        if not self.visitation_scale > 0:
            raise ConfigError("visitation_scale must be positive")
        if self.threshold != "min":
            try:
                if float(self.threshold) < 0:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"threshold must be 'min' or a nonnegative amount, got {self.threshold!r}") from None
        if self.pi not in ("rounded", "exact"):
            raise ConfigError("pi must be 'rounded' or 'exact'")
        bad = [p for p in self.purposes if p not in {m.value for m in Purpose}]
        if bad:
            raise ConfigError(f"unknown purpose(s): {', '.join(bad)}")

    def check_inputs(self) -> None:
        for key in _PATH_KEYS:
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{key} file not found: {p}")

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v
        return out


_FLOAT_KEYS = {"total_annual_visits", "exchange_rate", "visitation_scale", "total_visits"}


def _coerce(key: str, raw: Any, base: Path) -> Any:
    if raw is None:
        return None
    if key in _PATH_KEYS or key == "output_dir":
        p = Path(str(raw)).expanduser()
        return p if p.is_absolute() else base / p
    if key in _FLOAT_KEYS:
        try:
            return float(str(raw).replace("_", ""))
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if key == "seed":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"seed must be an integer, got {raw!r}") from None
    if key == "purposes":
        return tuple(p.strip() for p in re.split(r"[,\s]+", str(raw)) if p.strip()) if isinstance(raw, str) else tuple(raw)
    if key == "threshold":
        return str(raw).strip()
    if key == "cov_type":
        return str(raw).strip().upper()
    return str(raw).strip()


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a flat ``key = value`` config file and apply overrides.

    Relative paths in the file resolve against the file's directory; paths in
    ``overrides`` resolve against the working directory. Overrides (CLI
    flags) win over the file; ``$ZTCM_OUTPUT_DIR`` wins over the file's
    ``output_dir`` but not over an explicit override.
    """
    values: dict[str, Any] = {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string("[run]\n" + path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if parser.sections() != ["run"]:
            raise ConfigError(f"{path}: config must be flat key = value pairs (no sections)")
        base = path.resolve().parent
        for key, raw in parser["run"].items():
            if key not in known:
                raise ConfigError(f"{path}: unknown key {key!r}")
            values[key] = _coerce(key, raw, base)
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        values["output_dir"] = Path(env_out)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown setting {key!r}")
        values[key] = _coerce(key, raw, Path.cwd())
    missing = [k for k in ("survey", "zones", "income") if k not in values]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunResult:
    config: RunConfig
    zones: list[ZoneRecord]
    rows: list[ObservationRow]
    fit: OlsFit
    valuation: ValuationReport
    spots: SpotTable | None
    files: list[Path] = field(default_factory=list)
    rejects: int = 0


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "_", s).strip("_") or "zone"


def fit_report_text(fit: OlsFit) -> str:
    rows = [[r["variable"], r["coef"], r["robust_se"], r["t"], r["p"], r["ci_low"], r["ci_high"]] for r in fit.table()]
    text = format_table(
        ["Variable", "Coefficient", "Robust SE", "t", "P>|t|", "CI 95% low", "CI 95% high"],
        rows,
        digits=5,
        title="Visit-generating function (OLS, robust SE)",
    )
    f_df = f"F({fit.k - 1}, {fit.df_resid})"
    text += (
        f"\nNumber of observations = {fit.n}, {f_df} = {fit.wald_F:.4g}, Prob > F = {fit.wald_p:.4g}, "
        f"R-squared = {fit.r_squared:.4f}, Root MSE = {fit.root_mse:.5g}, covariance = {fit.cov_type}\n"
    )
    if fit.flags:
        text += f"flags: {', '.join(fit.flags)}\n"
    return text


def write_valuation_outputs(out: Path, report: ValuationReport, zone_slopes: Mapping[str, float] | None = None) -> list[Path]:
    """Zone valuation CSV/text, summary JSON and per-zone demand-curve CSVs."""
    files = []
    header = ["zone", "tc", "visits", "choke", "twtp"]
    rows = [[z.zone_id, z.travel_cost, z.visits, z.choke_price, z.twtp] for z in report.zones]
    write_csv(out / "valuation.csv", header, rows)
    files.append(out / "valuation.csv")
    text_rows = [
        [z.zone_id, z.travel_cost, z.visits, z.choke_price, z.twtp / 1e6, convert_currency(z.twtp, report.exchange_rate) / 1e6]
        for z in report.zones
    ]
    text_rows.append(["Total", None, report.total_visits, None, report.total_value_bdt / 1e6, report.total_value_usd / 1e6])
    text = format_table(
        ["Zone", "Travel cost (BDT)", "Visits", "Choke price (BDT)", "TWTP (M BDT)", "TWTP (M USD)"],
        text_rows,
        digits=1,
        title=f"Zonal valuation (exchange rate {report.exchange_rate} BDT/USD)",
    )
    s = report.summary()
    if s["mean_cs_per_visit_bdt"] is not None:
        text += f"\nMean CS per visit: BDT {s['mean_cs_per_visit_bdt']:,.1f} (USD {s['mean_cs_per_visit_usd']:,.2f})\n"
    if s["value_per_ha_bdt"] is not None:
        text += f"Value per ha: BDT {s['value_per_ha_bdt']:,.1f} (USD {s['value_per_ha_usd']:,.2f})\n"
    write_text(out / "valuation.txt", text)
    files.append(out / "valuation.txt")

    curves = out / "demand_curves"
    curves.mkdir(exist_ok=True)
    slopes = zone_slopes or {}
    for z in report.zones:
        if not math.isfinite(z.travel_cost):
            continue
        pts = demand_curve_points(z.travel_cost, z.visits, slopes.get(z.zone_id, report.slope), steps=100)
        p = curves / f"{_slug(z.zone_id)}.csv"
        write_csv(p, ["price", "quantity"], pts)
        files.append(p)
    return files


def write_spot_outputs(out: Path, spots: SpotTable, total_bdt: float, rate: float) -> list[Path]:
    values = allocate_spot_values(total_bdt, list(spots.spots)) if spots.spots else []
    header = ["name", "compartment_no", "walk_distance_km", "area_km2", "area_ha", "value_bdt", "value_usd"]
    rows = [
        [s.name, s.compartment_no, s.walk_distance_km, s.area_km2, s.area_ha, v, convert_currency(v, rate)]
        for s, v in zip(spots.spots, values)
    ]
    write_csv(out / "spots.csv", header, rows)
    text_rows = [[s.name, s.compartment_no, s.walk_distance_km, s.area_km2, s.area_ha, convert_currency(v, rate) / 1e6]
                 for s, v in zip(spots.spots, values)]
    text_rows.append(["Total", "-", spots.total_distance_km, spots.total_km2, spots.total_ha, convert_currency(total_bdt, rate) / 1e6])
    write_text(
        out / "spots.txt",
        format_table(["Spot", "Compartment", "Distance (km)", "Area (km2)", "Area (ha)", "Value (M USD/yr)"], text_rows, digits=1),
    )
    return [out / "spots.csv", out / "spots.txt"]


def run_pipeline(config: RunConfig) -> RunResult:
    """Run the full valuation and write every report into ``config.output_dir``.

    Raises ``ConfigError`` (missing inputs), ``DataValidationError`` (bad
    data) or ``NumericalError`` (rank-deficient design, upward demand).
    """
    started = _now()
    config.check_inputs()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    try:
        dataset = parse_survey_csv(config.survey)
        zone_inputs = read_zones_csv(config.zones)
        populations = {z.zone_id: z.population for z in zone_inputs}
        incomes = read_income_csv(config.income, populations)
        spot_rows = read_spots_csv(config.spots) if config.spots else None
    except ValueError as exc:
        raise DataValidationError(str(exc)) from exc
    tourists = filter_tourists(dataset, [Purpose(p) for p in config.purposes])
    logger.info("%d survey rows, %d rejected, %d kept after purpose filter", dataset.row_count, len(dataset.rejects), len(tourists))

    threshold = None if config.threshold == "min" else float(config.threshold)
    try:
        zones = build_zone_table(
            tourists,
            zone_inputs,
            incomes,
            total_annual_visits=config.total_annual_visits,
            threshold=threshold,
            scale=config.visitation_scale,
        )
        rows = build_observation_rows(tourists, zones)
    except ValueError as exc:
        raise DataValidationError(str(exc)) from exc
    if len(rows) <= len(VGF_COLUMNS):
        raise NumericalError(f"only {len(rows)} observation rows for {len(VGF_COLUMNS)} coefficients")

    design = design_from_rows(rows)
    fit = fit_ols(design, config.cov_type)
    beta_tc = fit["TCost"]
    if not beta_tc < 0:
        raise NumericalError(f"fitted travel-cost coefficient {beta_tc:.6g} is not negative; no downward demand to value")
    slope = DemandSlope.from_coefficient(beta_tc)
    # head-count slope per zone: rate slope scaled by that zone's potential visitors
    zone_slopes = {z.zone_id: slope.b * z.potential_visitors / z.scale for z in zones}

    spots = build_spot_table(spot_rows, ROUNDED_PI if config.pi == "rounded" else math.pi) if spot_rows is not None else None
    valuation = build_valuation_report(
        [(z.zone_id, z.mean_travel_cost, z.annual_visits) for z in zones],
        slope,
        exchange_rate=config.exchange_rate,
        total_visits=config.total_visits,
        area_ha=spots.total_ha if spots and spots.total_ha > 0 else None,
        zone_slopes=zone_slopes,
    )

    files: list[Path] = []
    write_json(out / "fit.json", fit.to_dict() | {"dependent": "V", "visitation_scale": config.visitation_scale})
    write_text(out / "fit.txt", fit_report_text(fit))
    files += [out / "fit.json", out / "fit.txt"]

    write_csv(
        out / "observations.csv",
        ["zone_id", "mode", "V", "TCost", "Alone", "Air", "Khln", "Package", "respondents"],
        [[r.zone_id, r.mode, r.V, r.TCost, r.Alone, r.Air, r.Khln, r.Package, r.respondents] for r in rows],
    )
    zone_header = ["zone", "annual_visits", "potential_visitors", "visitation_rate", "mean_travel_cost", "income_threshold", "respondents"]
    zone_rows = [[z.zone_id, z.annual_visits, z.potential_visitors, z.visitation_rate, z.mean_travel_cost, z.income_threshold, z.respondents] for z in zones]
    write_csv(out / "zones.csv", zone_header, zone_rows)
    write_text(out / "zones.txt", format_table(zone_header, zone_rows, digits=2, title=f"Zonal table (visitation rate per {config.visitation_scale:,.0f} potential visitors)"))
    files += [out / "observations.csv", out / "zones.csv", out / "zones.txt"]

    files += write_valuation_outputs(out, valuation, zone_slopes)
    if spots is not None:
        files += write_spot_outputs(out, spots, valuation.total_value_bdt, config.exchange_rate)
    if dataset.rejects:
        write_csv(out / "rejects.csv", ["line", "reason"], [[r.line, r.reason] for r in dataset.rejects])
        files.append(out / "rejects.csv")

    summary = valuation.summary() | {
        "units": {
            "money": "BDT (USD at exchange_rate)",
            "visitation_rate": f"visits per {config.visitation_scale:g} potential visitors",
            "slope_b": "visitation-rate units per BDT",
            "zone_quantity": "annual visits; per-zone slope = slope_b * potential_visitors / visitation_scale",
        },
        "zone_slopes_visits_per_bdt": zone_slopes,
        "n_observations": len(rows),
        "survey_rows": dataset.row_count,
        "survey_rejects": len(dataset.rejects),
        "survey_kept": len(tourists),
    }
    write_json(out / "summary.json", summary)
    files.append(out / "summary.json")

    manifest = {
        "artifact": "ztcm",
        "version": __version__,
        "command": "run",
        "config": config.echo(),
        "inputs": {k: {"path": str(getattr(config, k)), "sha256": file_digest(getattr(config, k))}
                   for k in _PATH_KEYS if getattr(config, k) is not None},
        "outputs": sorted(str(p.relative_to(out)) for p in files),
        "timestamps": {"started": started, "finished": _now()},
    }
    write_json(out / "manifest.json", manifest)
    files.append(out / "manifest.json")
    return RunResult(config, zones, rows, fit, valuation, spots, files, len(dataset.rejects))
