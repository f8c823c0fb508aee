"""Zonal table construction and regression observations.

Visitation rates are always expressed per ``VISITATION_SCALE`` (10,000)
potential visitors; the scale travels with every ``ZoneRecord`` so reports
can label it.
"""

from __future__ import annotations

import bisect
import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ztcm.errors import DataValidationError
from ztcm.regression import VGF_COLUMNS, DesignMatrix
from ztcm.survey import DOMESTIC_ZONES, Dataset, TravelMode, zonal_shares

__all__ = [
    "VISITATION_SCALE",
    "ZoneInput",
    "IncomeDistribution",
    "ZoneRecord",
    "ObservationRow",
    "scale_annual_visits",
    "potential_visitors",
    "visitation_rate",
    "min_income_thresholds",
    "build_zone_table",
    "build_observation_rows",
    "design_from_rows",
    "read_zones_csv",
    "read_income_csv",
    "read_observation_csv",
    "write_observation_csv",
]

VISITATION_SCALE = 10_000.0
KHULNA = "Khulna"


@dataclass(frozen=True)
class ZoneInput:
    """One line of the zones file."""

    zone_id: str
    population: float
    annual_visits: float | None = None


@dataclass(frozen=True)
class IncomeDistribution:
    """Income quantile table for one zone.

    ``quantiles`` holds ``(cumulative population fraction, monthly income BDT)``
    pairs. The first row is the floor of the distribution: its whole
    cumulative fraction sits at that income, and nobody earns less. Between
    rows the CDF is linear in income; population above the last row's
    fraction (if it is below 1) lies beyond every listed income.
    """

    zone_id: str
    quantiles: tuple[tuple[float, float], ...]
    population: float

    def __post_init__(self) -> None:
        q = tuple((float(f), float(x)) for f, x in self.quantiles)
        if not q:
            raise ValueError(f"{self.zone_id}: empty income quantile table")
        fracs = [f for f, _ in q]
        incomes = [x for _, x in q]
        if any(not 0.0 < f <= 1.0 for f in fracs):
            raise ValueError(f"{self.zone_id}: cumulative fractions must lie in (0, 1]")
        if any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise ValueError(f"{self.zone_id}: cumulative fractions must be strictly increasing")
        if any(b < a for a, b in zip(incomes, incomes[1:])):
            raise ValueError(f"{self.zone_id}: incomes must be nondecreasing")
        if self.population < 0:
            raise ValueError(f"{self.zone_id}: population must be nonnegative")
        object.__setattr__(self, "quantiles", q)

    def share_below(self, income: float) -> float:
        """Fraction of the population earning strictly less than ``income``."""
        fracs = [f for f, _ in self.quantiles]
        incomes = [x for _, x in self.quantiles]
        if income <= incomes[0]:
            return 0.0
        if income > incomes[-1]:
            return fracs[-1]
        i = bisect.bisect_left(incomes, income)  # incomes[i-1] < income <= incomes[i]
        x0, x1 = incomes[i - 1], incomes[i]
        f0, f1 = fracs[i - 1], fracs[i]
        return f0 + (f1 - f0) * (income - x0) / (x1 - x0)

    def income_at(self, u: float) -> float:
        """Inverse of the CDF: income of the individual at population rank ``u``."""
        fracs = [f for f, _ in self.quantiles]
        incomes = [x for _, x in self.quantiles]
        if u <= fracs[0]:
            return incomes[0]
        if u > fracs[-1]:
            return math.inf
        i = bisect.bisect_left(fracs, u)
        f0, f1 = fracs[i - 1], fracs[i]
        return incomes[i - 1] + (incomes[i] - incomes[i - 1]) * (u - f0) / (f1 - f0)


@dataclass(frozen=True)
class ZoneRecord:
    zone_id: str
    annual_visits: float
    potential_visitors: float
    mean_travel_cost: float
    visitation_rate: float
    income_threshold: float
    respondents: int
    scale: float = VISITATION_SCALE


@dataclass(frozen=True)
class ObservationRow:
    zone_id: str
    mode: str
    V: float
    TCost: float
    Alone: int
    Air: int
    Khln: int
    Package: int
    respondents: int = 0

    def __post_init__(self) -> None:
        for name in ("Alone", "Air", "Khln", "Package"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        if self.Khln != int(self.zone_id == KHULNA):
            raise ValueError("Khln must be 1 exactly for Khulna rows")
        if self.Air != int(self.mode == TravelMode.AIR_COMBINED.value):
            raise ValueError("Air must be 1 exactly for air-combined rows")

    def regressors(self) -> dict[str, float]:
        return {"TCost": self.TCost, "Alone": self.Alone, "Air": self.Air, "Khln": self.Khln, "Package": self.Package}


def scale_annual_visits(total_annual: float, shares: Mapping[str, float], *, integer: bool = False) -> dict[str, float]:
    """Split an annual visitor total across zones by sample shares.

    With ``integer=True`` counts are whole visitors, rounded by largest
    remainder so they still add up to ``total_annual``.
    """
    if total_annual < 0:
        raise ValueError("annual visitor total must be nonnegative")
    if abs(math.fsum(shares.values()) - 1.0) > 1e-9:
        raise ValueError("zone shares must sum to 1")
    raw = {z: total_annual * s for z, s in shares.items()}
    if not integer:
        return raw
    floors = {z: math.floor(v) for z, v in raw.items()}
    left = int(round(total_annual)) - sum(floors.values())
    by_remainder = sorted(raw, key=lambda z: (-(raw[z] - floors[z]), z))
    for z in by_remainder[:left]:
        floors[z] += 1
    return {z: float(floors[z]) for z in raw}


def potential_visitors(dist: IncomeDistribution, threshold: float) -> float:
    """People in the zone with monthly income at or above ``threshold``."""
    if threshold < 0:
        raise ValueError("income threshold must be nonnegative")
    return dist.population * (1.0 - dist.share_below(threshold))


def visitation_rate(visits: float, potential: float, scale: float = VISITATION_SCALE) -> float:
    """Visits per ``scale`` potential visitors."""
    if not potential > 0:
        raise ValueError("potential visitors must be positive")
    return visits / potential * scale


def min_income_thresholds(dataset: Dataset) -> dict[str, float]:
    """Lowest reported monthly income among local respondents of each zone."""
    out: dict[str, float] = {}
    for r in dataset.local:
        if r.monthly_income is None:
            continue
        out[r.origin_zone] = min(out.get(r.origin_zone, math.inf), r.monthly_income)
    return out


def build_zone_table(
    dataset: Dataset,
    zones: Sequence[ZoneInput],
    incomes: Mapping[str, IncomeDistribution],
    *,
    total_annual_visits: float | None = None,
    threshold: float | Mapping[str, float] | None = None,
    scale: float = VISITATION_SCALE,
) -> list[ZoneRecord]:
    """Assemble visits, potential visitors, rates and travel costs per zone.

    Annual visits come from ``total_annual_visits`` split by the sample's
    zonal shares when given, otherwise from each zone's ``annual_visits``.
    The income threshold defaults to each zone's lowest respondent income;
    a number applies to every zone and a mapping overrides per zone.
    """
    local = dataset.local
    zone_ids = [z.zone_id for z in zones]
    unknown = sorted({r.origin_zone for r in local} - set(zone_ids))
    if unknown:
        raise DataValidationError(f"respondents come from zone(s) missing in the zone table: {', '.join(unknown)}")

    if total_annual_visits is not None:
        shares = zonal_shares(dataset)
        visits = {z: 0.0 for z in zone_ids} | scale_annual_visits(total_annual_visits, shares)
    else:
        missing = [z.zone_id for z in zones if z.annual_visits is None]
        if missing:
            raise DataValidationError(f"no annual visits for zone(s) {', '.join(missing)} and no total given")
        visits = {z.zone_id: float(z.annual_visits) for z in zones}

    mins = min_income_thresholds(dataset)
    global_min = min(mins.values()) if mins else None
    costs: dict[str, list[float]] = defaultdict(list)
    for r in local:
        costs[r.origin_zone].append(r.travel_cost)

    table = []
    for z in zones:
        if isinstance(threshold, Mapping):
            thr = threshold.get(z.zone_id, mins.get(z.zone_id, global_min))
        elif threshold is not None:
            thr = float(threshold)
        else:
            thr = mins.get(z.zone_id, global_min)
        if thr is None:
            raise DataValidationError(f"zone {z.zone_id}: no respondent income to derive a threshold from")
        if z.zone_id not in incomes:
            raise DataValidationError(f"zone {z.zone_id}: no income distribution")
        dist = incomes[z.zone_id]
        if dist.population != z.population:
            dist = IncomeDistribution(dist.zone_id, dist.quantiles, z.population)
        potential = potential_visitors(dist, thr)
        if not potential > 0:
            raise DataValidationError(f"zone {z.zone_id}: nobody above the income threshold {thr}")
        zc = costs.get(z.zone_id, [])
        table.append(
            ZoneRecord(
                zone_id=z.zone_id,
                annual_visits=visits[z.zone_id],
                potential_visitors=potential,
                mean_travel_cost=math.fsum(zc) / len(zc) if zc else math.nan,
                visitation_rate=visitation_rate(visits[z.zone_id], potential, scale),
                income_threshold=thr,
                respondents=len(zc),
                scale=scale,
            )
        )
    return table


def _majority(flags: Sequence[bool]) -> int:
    # ties go to 0
    return int(sum(flags) * 2 > len(flags))


def build_observation_rows(dataset: Dataset, zone_table: Iterable[ZoneRecord]) -> list[ObservationRow]:
    """One regression row per non-empty (zone, travel mode) cell of local respondents.

    The zone's visitation rate is apportioned to its cells by respondent
    share; ``TCost`` is the cell's mean travel cost; ``Alone`` and
    ``Package`` follow the cell majority (ties to 0).
    """
    zt = {z.zone_id: z for z in zone_table}
    cells: dict[tuple[str, str], list] = defaultdict(list)
    per_zone: dict[str, int] = defaultdict(int)
    for r in dataset.local:
        if r.origin_zone not in zt:
            raise DataValidationError(f"zone {r.origin_zone} has respondents but no zone-table entry")
        cells[(r.origin_zone, r.travel_mode.value)].append(r)
        per_zone[r.origin_zone] += 1

    zone_order = {z: i for i, z in enumerate(DOMESTIC_ZONES)}
    mode_order = {m.value: i for i, m in enumerate(TravelMode)}
    keys = sorted(cells, key=lambda k: (zone_order.get(k[0], len(zone_order)), k[0], mode_order[k[1]]))
    rows = []
    for zone, mode in keys:
        members = cells[(zone, mode)]
        rows.append(
            ObservationRow(
                zone_id=zone,
                mode=mode,
                V=zt[zone].visitation_rate * len(members) / per_zone[zone],
                TCost=math.fsum(m.travel_cost for m in members) / len(members),
                Alone=_majority([m.alone for m in members]),
                Air=int(mode == TravelMode.AIR_COMBINED.value),
                Khln=int(zone == KHULNA),
                Package=_majority([m.package_tour for m in members]),
                respondents=len(members),
            )
        )
    return rows


def design_from_rows(rows: Sequence[ObservationRow], columns: Sequence[str] = VGF_COLUMNS[1:]) -> DesignMatrix:
    """Design matrix (intercept first) for the visit-generating function."""
    regs = {c: [r.regressors()[c] for r in rows] for c in columns}
    return DesignMatrix.with_intercept(regs, [r.V for r in rows])


def _open_csv(path: str | Path, required: set[str]):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        fh.close()
        raise DataValidationError(f"{path}: header must contain {', '.join(sorted(required))}")
    return fh, reader


def read_zones_csv(path: str | Path) -> list[ZoneInput]:
    """``zone_id, population[, annual_visits]`` rows."""
    fh, reader = _open_csv(path, {"zone_id", "population"})
    with fh:
        out = []
        for row in reader:
            try:
                av = row.get("annual_visits")
                out.append(ZoneInput(row["zone_id"].strip(), float(row["population"]), float(av) if av not in (None, "") else None))
            except ValueError as exc:
                raise DataValidationError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def read_income_csv(path: str | Path, populations: Mapping[str, float] | None = None) -> dict[str, IncomeDistribution]:
    """``zone_id, cum_fraction, income_bdt`` rows, grouped per zone in file order."""
    fh, reader = _open_csv(path, {"zone_id", "cum_fraction", "income_bdt"})
    grouped: dict[str, list[tuple[float, float]]] = defaultdict(list)
    with fh:
        for row in reader:
            try:
                grouped[row["zone_id"].strip()].append((float(row["cum_fraction"]), float(row["income_bdt"])))
            except ValueError as exc:
                raise DataValidationError(f"{path}:{reader.line_num}: {exc}") from None
    populations = populations or {}
    try:
        return {z: IncomeDistribution(z, tuple(q), populations.get(z, 0.0)) for z, q in grouped.items()}
    except ValueError as exc:
        raise DataValidationError(f"{path}: {exc}") from None


_OBS_FIELDS = ("zone_id", "mode", "V", "TCost", "Alone", "Air", "Khln", "Package", "respondents")


def write_observation_csv(rows: Sequence[ObservationRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_OBS_FIELDS)
        for r in rows:
            w.writerow([r.zone_id, r.mode, repr(r.V), repr(r.TCost), r.Alone, r.Air, r.Khln, r.Package, r.respondents])


def read_observation_csv(path: str | Path) -> list[ObservationRow]:
    fh, reader = _open_csv(path, set(_OBS_FIELDS[:8]))
    with fh:
        rows = []
        for row in reader:
            try:
                rows.append(
                    ObservationRow(
                        zone_id=row["zone_id"],
                        mode=row["mode"],
                        V=float(row["V"]),
                        TCost=float(row["TCost"]),
                        Alone=int(row["Alone"]),
                        Air=int(row["Air"]),
                        Khln=int(row["Khln"]),
                        Package=int(row["Package"]),
                        respondents=int(row.get("respondents") or 0),
                    )
                )
            except ValueError as exc:
                raise DataValidationError(f"{path}:{reader.line_num}: {exc}") from None
    return rows


def observation_matrix(rows: Sequence[ObservationRow]) -> np.ndarray:
    return np.array([[r.V, r.TCost, r.Alone, r.Air, r.Khln, r.Package] for r in rows], dtype=float)
