"""Turn a fitted visit-generating function into money values.

Every zone gets its own linear demand segment with the common travel-cost
slope ``b`` (``|beta_1|``) passing through its observed (travel cost, visits)
point. Consumer surplus is the triangle under that segment above the zone's
travel cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ztcm.geometry import TouristSpot

__all__ = [
    "DEFAULT_EXCHANGE_RATE",
    "DemandSlope",
    "ZoneValuation",
    "ValuationReport",
    "choke_price",
    "zone_consumer_surplus",
    "value_zone",
    "total_wtp",
    "mean_cs_per_visit",
    "value_per_hectare",
    "allocate_spot_values",
    "convert_currency",
    "demand_curve_points",
    "build_valuation_report",
]

DEFAULT_EXCHANGE_RATE = 78.0  # BDT per USD


@dataclass(frozen=True)
class DemandSlope:
    """Magnitude of the travel-cost coefficient, in visits per BDT."""

    b: float
    unit: str = "visitation-rate units per BDT"

    def __post_init__(self) -> None:
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"demand slope must be positive and finite, got {self.b}")

    @classmethod
    def from_coefficient(cls, beta_tcost: float, unit: str = "visitation-rate units per BDT") -> "DemandSlope":
        """Build from a signed travel-cost coefficient, which must be negative."""
        if not beta_tcost < 0:
            raise ValueError(f"travel-cost coefficient must be negative for a downward demand, got {beta_tcost}")
        return cls(-beta_tcost, unit)


def _as_slope(slope: DemandSlope | float) -> DemandSlope:
    return slope if isinstance(slope, DemandSlope) else DemandSlope(float(slope))


def choke_price(travel_cost: float, visits: float, slope: DemandSlope | float) -> float:
    """Travel cost at which the zone's demand line reaches zero visits."""
    slope = _as_slope(slope)
    if visits < 0:
        raise ValueError("visits must be nonnegative")
    return travel_cost + visits / slope.b


def zone_consumer_surplus(travel_cost: float, visits: float, slope: DemandSlope | float) -> float:
    slope = _as_slope(slope)
    if visits < 0:
        raise ValueError("visits must be nonnegative")
    return 0.5 * visits * (choke_price(travel_cost, visits, slope) - travel_cost)


@dataclass(frozen=True)
class ZoneValuation:
    zone_id: str
    travel_cost: float
    visits: float
    choke_price: float
    consumer_surplus: float
    twtp: float
    zero_visits: bool = False


def value_zone(zone_id: str, travel_cost: float, visits: float, slope: DemandSlope | float) -> ZoneValuation:
    cs = zone_consumer_surplus(travel_cost, visits, slope)
    return ZoneValuation(
        zone_id=zone_id,
        travel_cost=travel_cost,
        visits=visits,
        choke_price=choke_price(travel_cost, visits, slope),
        consumer_surplus=cs,
        twtp=cs,
        zero_visits=visits == 0,
    )


def total_wtp(zones: Iterable[ZoneValuation | float]) -> float:
    values = [z.twtp if isinstance(z, ZoneValuation) else float(z) for z in zones]
    if not values:
        raise ValueError("total_wtp needs at least one zone")
    return math.fsum(values)


def mean_cs_per_visit(total: float, total_visits: float) -> float:
    if not total_visits > 0:
        raise ValueError("total visits must be positive")
    return total / total_visits


def value_per_hectare(total: float, area_ha: float) -> float:
    if not area_ha > 0:
        raise ValueError("area must be positive")
    return total / area_ha


def convert_currency(amount: float, rate: float = DEFAULT_EXCHANGE_RATE) -> float:
    """BDT to USD at ``rate`` BDT per USD."""
    if not rate > 0:
        raise ValueError(f"exchange rate must be positive, got {rate}")
    return amount / rate


def allocate_spot_values(total: float, spots: Sequence[TouristSpot | float]) -> list[float]:
    """Split ``total`` across spots in proportion to their area.

    ``spots`` may be ``TouristSpot`` objects or bare areas in hectares.
    """
    if not spots:
        raise ValueError("no spots to allocate to")
    areas = np.array([s.area_ha if isinstance(s, TouristSpot) else float(s) for s in spots])
    if np.any(areas <= 0):
        raise ValueError("spot areas must be positive")
    return list(total * areas / math.fsum(areas))


def demand_curve_points(travel_cost: float, visits: float, slope: DemandSlope | float, steps: int = 100):
    """(price, quantity) pairs along the zone's demand line, TC to choke.

    Returns ``steps + 1`` points including both end points.
    """
    slope = _as_slope(slope)
    choke = choke_price(travel_cost, visits, slope)
    prices = np.linspace(travel_cost, choke, steps + 1)
    quantities = np.maximum(visits - slope.b * (prices - travel_cost), 0.0)
    quantities[-1] = 0.0
    return list(zip(prices.tolist(), quantities.tolist()))


@dataclass(frozen=True)
class ValuationReport:
    zones: tuple[ZoneValuation, ...]
    total_value_bdt: float
    exchange_rate: float
    total_visits: float | None = None
    area_ha: float | None = None
    mean_cs_per_visit_bdt: float | None = None
    value_per_ha_bdt: float | None = None
    slope: float = field(default=math.nan)

    @property
    def total_value_usd(self) -> float:
        return convert_currency(self.total_value_bdt, self.exchange_rate)

    @property
    def mean_cs_per_visit_usd(self) -> float | None:
        if self.mean_cs_per_visit_bdt is None:
            return None
        return convert_currency(self.mean_cs_per_visit_bdt, self.exchange_rate)

    @property
    def value_per_ha_usd(self) -> float | None:
        if self.value_per_ha_bdt is None:
            return None
        return convert_currency(self.value_per_ha_bdt, self.exchange_rate)

    def summary(self) -> dict:
        return {
            "slope_b": self.slope,
            "exchange_rate_bdt_per_usd": self.exchange_rate,
            "total_value_bdt": self.total_value_bdt,
            "total_value_usd": self.total_value_usd,
            "total_visits": self.total_visits,
            "mean_cs_per_visit_bdt": self.mean_cs_per_visit_bdt,
            "mean_cs_per_visit_usd": self.mean_cs_per_visit_usd,
            "area_ha": self.area_ha,
            "value_per_ha_bdt": self.value_per_ha_bdt,
            "value_per_ha_usd": self.value_per_ha_usd,
            "zero_visit_zones": [z.zone_id for z in self.zones if z.zero_visits],
        }


def build_valuation_report(
    zones: Sequence[tuple[str, float, float]],
    slope: DemandSlope | float,
    *,
    exchange_rate: float = DEFAULT_EXCHANGE_RATE,
    total_visits: float | None = None,
    area_ha: float | None = None,
    zone_slopes: Mapping[str, DemandSlope | float] | None = None,
) -> ValuationReport:
    """Value every ``(zone_id, travel_cost, visits)`` triple and aggregate.

    ``slope`` must be in the same quantity unit as the visits. When zone
    visits are head counts but the fitted slope is per visitation rate, pass
    the converted per-zone slopes in ``zone_slopes``. ``total_visits``
    defaults to the sum of zone visits.
    """
    if not exchange_rate > 0:
        raise ValueError("exchange rate must be positive")
    slope = _as_slope(slope)
    zone_slopes = zone_slopes or {}
    valued = tuple(value_zone(z, tc, v, zone_slopes.get(z, slope)) for z, tc, v in zones)
    total = total_wtp(valued)
    if total_visits is None:
        total_visits = math.fsum(z.visits for z in valued)
    mean_cs = mean_cs_per_visit(total, total_visits) if total_visits > 0 else None
    per_ha = value_per_hectare(total, area_ha) if area_ha else None
    return ValuationReport(
        zones=valued,
        total_value_bdt=total,
        exchange_rate=exchange_rate,
        total_visits=total_visits,
        area_ha=area_ha,
        mean_cs_per_visit_bdt=mean_cs,
        value_per_ha_bdt=per_ha,
        slope=slope.b,
    )
