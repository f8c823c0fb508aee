"""Tourist-spot coverage areas.

Each spot is modelled as a half circle on one river bank whose radius is the
distance visitors walk from the landing point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "ROUNDED_PI",
    "HA_PER_KM2",
    "TouristSpot",
    "SpotTable",
    "half_circle_area_km2",
    "km2_to_ha",
    "build_spot_table",
    "read_spots_csv",
]

# Five-digit pi used for the published Sundarban spot areas.
ROUNDED_PI = 3.14159
HA_PER_KM2 = 100.0


def half_circle_area_km2(distance_km: float, pi: float = ROUNDED_PI) -> float:
    if distance_km < 0:
        raise ValueError(f"walk distance must be nonnegative, got {distance_km}")
    return pi * distance_km * distance_km / 2.0


def km2_to_ha(area_km2: float) -> float:
    if area_km2 < 0:
        raise ValueError(f"area must be nonnegative, got {area_km2}")
    return HA_PER_KM2 * area_km2


@dataclass(frozen=True)
class TouristSpot:
    name: str
    compartment_no: str
    walk_distance_km: float
    area_km2: float
    area_ha: float

    @classmethod
    def from_distance(cls, name: str, compartment_no: str, walk_distance_km: float, pi: float = ROUNDED_PI):
        km2 = half_circle_area_km2(walk_distance_km, pi)
        return cls(name, str(compartment_no), float(walk_distance_km), km2, km2_to_ha(km2))


@dataclass(frozen=True)
class SpotTable:
    spots: tuple[TouristSpot, ...]
    total_distance_km: float
    total_km2: float
    total_ha: float

    def rows(self) -> list[dict]:
        return [
            {
                "name": s.name,
                "compartment_no": s.compartment_no,
                "walk_distance_km": s.walk_distance_km,
                "area_km2": s.area_km2,
                "area_ha": s.area_ha,
            }
            for s in self.spots
        ]


def build_spot_table(spots: Iterable[Sequence], pi: float = ROUNDED_PI) -> SpotTable:
    """Derive areas for ``(name, compartment_no, walk_distance_km)`` triples.

    Pass ``pi=math.pi`` for full precision instead of the published constant.
    """
    built = []
    seen = set()
    for name, compartment, distance in spots:
        if name in seen:
            raise ValueError(f"duplicate spot name {name!r}")
        seen.add(name)
        built.append(TouristSpot.from_distance(name, compartment, float(distance), pi))
    return SpotTable(
        spots=tuple(built),
        total_distance_km=math.fsum(s.walk_distance_km for s in built),
        total_km2=math.fsum(s.area_km2 for s in built),
        total_ha=math.fsum(s.area_ha for s in built),
    )


def read_spots_csv(path: str | Path) -> list[tuple[str, str, float]]:
    """Read ``name, compartment_no, walk_distance_km`` rows."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"spots file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"name", "compartment_no", "walk_distance_km"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {', '.join(sorted(need))}")
        return [(r["name"], r["compartment_no"], float(r["walk_distance_km"])) for r in reader]
