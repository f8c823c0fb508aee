"""Visitor-survey data model, CSV ingestion and descriptive shares."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from ztcm.errors import DataValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "VisitorKind",
    "TravelMode",
    "Purpose",
    "Sex",
    "AgeBand",
    "EducationBand",
    "MaritalStatus",
    "Occupation",
    "DOMESTIC_ZONES",
    "FOREIGN",
    "DEFAULT_SCHEMA",
    "SurveyRecord",
    "RejectedRow",
    "Dataset",
    "parse_survey_csv",
    "write_survey_csv",
    "filter_tourists",
    "zonal_shares",
]


class VisitorKind(str, Enum):
    LOCAL = "local"
    FOREIGN = "foreign"


class TravelMode(str, Enum):
    BUS = "bus"
    BOAT = "boat"
    AIR_COMBINED = "air_combined"


class Purpose(str, Enum):
    RECREATION = "recreation"
    SPIRITUAL = "spiritual"
    STUDY = "study"
    BUSINESS = "business"


class Sex(str, Enum):
    FEMALE = "female"
    MALE = "male"


class AgeBand(str, Enum):
    YOUTH = "youth"  # 18-30
    MIDDLE = "middle"  # 31-50
    OLD = "old"  # above 50


class EducationBand(str, Enum):
    BELOW_PRIMARY = "below_primary"
    PRIMARY = "primary"
    SECONDARY = "secondary"
    GRADUATE = "graduate"


class MaritalStatus(str, Enum):
    UNMARRIED = "unmarried"
    MARRIED = "married"
    DIVORCED = "divorced"
    WIDOW = "widow"


class Occupation(str, Enum):
    AGRICULTURE = "agriculture"
    BUSINESS = "business"
    HOUSEWIFE = "housewife"
    JOURNALIST = "journalist"
    RESEARCHER = "researcher"
    STUDENT = "student"
    TEACHER = "teacher"
    TECHNICAL = "technical"
    OTHER = "other"


DOMESTIC_ZONES: tuple[str, ...] = (
    "Barisal",
    "Chittagong",
    "Dhaka",
    "Khulna",
    "Rajshahi",
    "Rangpur",
    "Sylhet",
)
FOREIGN = "foreign"

_ZONE_LOOKUP = {z.lower(): z for z in DOMESTIC_ZONES} | {FOREIGN: FOREIGN}

# logical field -> CSV column
DEFAULT_SCHEMA: dict[str, str] = {
    "respondent_id": "respondent_id",
    "visitor_kind": "visitor_kind",
    "origin_zone": "origin_zone",
    "travel_cost": "travel_cost_bdt",
    "travel_mode": "travel_mode",
    "alone": "alone",
    "package_tour": "package_tour",
    "purpose": "purpose",
    "sex": "sex",
    "age_band": "age_band",
    "education_band": "education_band",
    "marital_status": "marital_status",
    "occupation": "occupation",
    "household_size": "household_size",
    "monthly_income": "monthly_income_bdt",
    "repeat_visitor": "repeat_visitor",
}

# Per-question nonresponse is allowed for everything else.
MANDATORY_FIELDS = (
    "respondent_id",
    "visitor_kind",
    "origin_zone",
    "travel_cost",
    "travel_mode",
    "alone",
    "package_tour",
    "purpose",
)


@dataclass(frozen=True)
class SurveyRecord:
    """One interviewed visitor. Money is monthly/per-trip BDT."""

    respondent_id: str
    visitor_kind: VisitorKind
    origin_zone: str
    travel_cost: float
    travel_mode: TravelMode
    alone: bool
    package_tour: bool
    purpose: Purpose
    sex: Sex | None = None
    age_band: AgeBand | None = None
    education_band: EducationBand | None = None
    marital_status: MaritalStatus | None = None
    occupation: Occupation | None = None
    household_size: int | None = None
    monthly_income: float | None = None
    repeat_visitor: bool | None = None

    def __post_init__(self) -> None:
        if not self.travel_cost >= 0:
            raise ValueError("travel_cost < 0")
        if self.monthly_income is not None and not self.monthly_income >= 0:
            raise ValueError("monthly_income < 0")
        if self.household_size is not None and self.household_size < 1:
            raise ValueError("household_size < 1")
        if (self.origin_zone == FOREIGN) != (self.visitor_kind is VisitorKind.FOREIGN):
            raise ValueError("origin_zone must be 'foreign' exactly when visitor_kind is foreign")

    @property
    def is_local(self) -> bool:
        return self.visitor_kind is VisitorKind.LOCAL


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass(frozen=True)
class Dataset:
    records: tuple[SurveyRecord, ...]
    source: str = "<memory>"
    row_count: int = 0
    rejects: tuple[RejectedRow, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        dupes = [rid for rid, n in Counter(r.respondent_id for r in self.records).items() if n > 1]
        if dupes:
            raise DataValidationError(f"duplicate respondent_id: {', '.join(sorted(dupes))}")

    @classmethod
    def from_records(cls, records: Iterable[SurveyRecord], source: str = "<memory>") -> "Dataset":
        recs = tuple(records)
        return cls(records=recs, source=source, row_count=len(recs))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def local(self) -> tuple[SurveyRecord, ...]:
        return tuple(r for r in self.records if r.is_local)

    def local_share(self) -> float:
        if not self.records:
            raise ValueError("empty dataset")
        return len(self.local) / len(self.records)


_BOOL_TRUE = {"1", "true", "yes", "y"}
_BOOL_FALSE = {"0", "false", "no", "n"}


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in _BOOL_TRUE:
        return True
    if v in _BOOL_FALSE:
        return False
    raise ValueError(f"not a 0/1 boolean: {raw!r}")


def _parse_enum(enum_cls: type[Enum], raw: str) -> Enum:
    try:
        return enum_cls(raw.strip().lower())
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ValueError(f"{raw!r} is not one of {allowed}") from None


def _parse_zone(raw: str) -> str:
    try:
        return _ZONE_LOOKUP[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown origin_zone {raw!r}") from None


_PARSERS = {
    "respondent_id": lambda s: s.strip(),
    "visitor_kind": lambda s: _parse_enum(VisitorKind, s),
    "origin_zone": _parse_zone,
    "travel_cost": float,
    "travel_mode": lambda s: _parse_enum(TravelMode, s),
    "alone": _parse_bool,
    "package_tour": _parse_bool,
    "purpose": lambda s: _parse_enum(Purpose, s),
    "sex": lambda s: _parse_enum(Sex, s),
    "age_band": lambda s: _parse_enum(AgeBand, s),
    "education_band": lambda s: _parse_enum(EducationBand, s),
    "marital_status": lambda s: _parse_enum(MaritalStatus, s),
    "occupation": lambda s: _parse_enum(Occupation, s),
    "household_size": int,
    "monthly_income": float,
    "repeat_visitor": _parse_bool,
}


def _record_from_row(row: Mapping[str, str], schema: Mapping[str, str]) -> SurveyRecord:
    values = {}
    for name, column in schema.items():
        raw = row.get(column)
        if raw is None or raw.strip() == "":
            if name in MANDATORY_FIELDS:
                raise ValueError(f"missing mandatory field {name}")
            values[name] = None
            continue
        try:
            values[name] = _PARSERS[name](raw)
        except ValueError as exc:
            raise ValueError(f"{name}: {exc}") from None
    return SurveyRecord(**values)


def parse_survey_csv(path: str | Path, schema: Mapping[str, str] | None = None) -> Dataset:
    """Read a visitor survey CSV.

    Rows that fail validation are skipped and listed in ``Dataset.rejects``
    with their 1-based file line number. Structural problems (missing file,
    header that lacks a declared column, duplicate ``respondent_id``) raise.

    Args:
        path: CSV file, UTF-8, comma separated, header row required.
        schema: Mapping from logical field name to column name. Defaults to
            ``DEFAULT_SCHEMA``; fields omitted from a custom schema are
            treated as unanswered.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    unknown = set(schema) - set(_PARSERS)
    if unknown:
        raise DataValidationError(f"schema declares unknown fields: {', '.join(sorted(unknown))}")
    missing_mandatory = [f for f in MANDATORY_FIELDS if f not in schema]
    if missing_mandatory:
        raise DataValidationError(f"schema lacks mandatory fields: {', '.join(missing_mandatory)}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"survey file not found: {path}")

    records: list[SurveyRecord] = []
    rejects: list[RejectedRow] = []
    seen: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataValidationError(f"{path}: missing header row")
        absent = [col for col in schema.values() if col not in header]
        if absent:
            raise DataValidationError(f"{path}: header is missing column(s) {', '.join(absent)}")
        n_rows = 0
        for row in reader:
            n_rows += 1
            line = reader.line_num
            try:
                rec = _record_from_row(row, schema)
            except ValueError as exc:
                rejects.append(RejectedRow(line, str(exc)))
                logger.warning("%s:%d rejected: %s", path, line, exc)
                continue
            if rec.respondent_id in seen:
                raise DataValidationError(
                    f"{path}:{line}: duplicate respondent_id {rec.respondent_id!r} (first at line {seen[rec.respondent_id]})"
                )
            seen[rec.respondent_id] = line
            records.append(rec)
    return Dataset(records=tuple(records), source=str(path), row_count=n_rows, rejects=tuple(rejects))


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_survey_csv(dataset: Dataset, path: str | Path, schema: Mapping[str, str] | None = None) -> None:
    """Write ``dataset`` in the format ``parse_survey_csv`` reads."""
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(schema.values()))
        for rec in dataset.records:
            writer.writerow([_format_value(getattr(rec, name)) for name in schema])


def filter_tourists(
    dataset: Dataset,
    keep: Iterable[Purpose] = (Purpose.RECREATION, Purpose.STUDY, Purpose.BUSINESS),
) -> Dataset:
    """Drop respondents whose trip purpose is not tourism (pilgrims by default)."""
    keep = frozenset(keep)
    kept = tuple(r for r in dataset.records if r.purpose in keep)
    if len(kept) == len(dataset.records):
        return dataset
    return replace(dataset, records=kept)


def zonal_shares(dataset: Dataset) -> dict[str, float]:
    """Fraction of local respondents originating from each domestic zone.

    Foreign visitors are ignored. Zones are returned in ``DOMESTIC_ZONES``
    order (unlisted zones follow alphabetically) and only if present.
    """
    counts = Counter(r.origin_zone for r in dataset.records if r.is_local)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no local records to compute zonal shares from")
    order = [z for z in DOMESTIC_ZONES if z in counts] + sorted(set(counts) - set(DOMESTIC_ZONES))
    return {z: counts[z] / total for z in order}


def record_field_names() -> list[str]:
    return [f.name for f in fields(SurveyRecord)]
