"""Synthetic surveys with known truth, and a Monte Carlo recovery harness.

Random numbers come from numpy's PCG64 bit generator. Replication ``r`` of a
scenario with seed ``s`` draws from ``SeedSequence(s, spawn_key=(r,))``;
the base sample (``generate_synthetic_survey``) uses ``SeedSequence(s)``.
Streams therefore do not depend on how replications are scheduled.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ztcm.errors import NumericalError
from ztcm.regression import VGF_COLUMNS, DesignMatrix, fit_ols
from ztcm.survey import (
    Dataset,
    Purpose,
    SurveyRecord,
    TravelMode,
    VisitorKind,
)
from ztcm.valuation import zone_consumer_surplus
from ztcm.zoning import KHULNA, IncomeDistribution, ObservationRow

__all__ = [
    "RNG_ALGORITHM",
    "ZoneSpec",
    "ScenarioSpec",
    "SyntheticSample",
    "MonteCarloReport",
    "default_scenario",
    "load_scenario",
    "generate_synthetic_survey",
    "monte_carlo_recovery",
]

RNG_ALGORITHM = "numpy PCG64; base stream SeedSequence(seed); replication r uses SeedSequence(seed, spawn_key=(r,))"

HETEROSKEDASTICITY = ("none", "tcost", "air")
MODES = tuple(m.value for m in TravelMode)
_MODE_COST_FACTOR = {"bus": 0.8, "boat": 1.0, "air_combined": 1.8}


@dataclass(frozen=True)
class ZoneSpec:
    zone_id: str
    population: float
    income_quantiles: tuple[tuple[float, float], ...]
    tc_mean: float
    tc_sd: float
    annual_visits: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    coefficients: tuple[float, ...]
    zones: tuple[ZoneSpec, ...]
    noise_sd: float = 0.0
    heteroskedasticity: str = "none"
    n_obs: int = 17
    respondents_per_row: int = 5
    p_alone: float = 0.3
    p_package: float = 0.8
    seed: int = 42

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(VGF_COLUMNS):
            raise ValueError(f"need {len(VGF_COLUMNS)} coefficients ({', '.join(VGF_COLUMNS)})")
        if not self.coefficients[1] < 0:
            raise ValueError("travel-cost coefficient must be negative")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.heteroskedasticity not in HETEROSKEDASTICITY:
            raise ValueError(f"heteroskedasticity must be one of {HETEROSKEDASTICITY}")
        if self.n_obs <= len(VGF_COLUMNS):
            raise ValueError("n_obs must exceed the number of coefficients")
        if self.respondents_per_row < 1:
            raise ValueError("respondents_per_row must be >= 1")
        if not self.zones:
            raise ValueError("at least one zone is required")
        if not 0 <= self.p_alone <= 1 or not 0 <= self.p_package <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    @property
    def beta_tcost(self) -> float:
        return self.coefficients[1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["zones"] = [asdict(z) | {"income_quantiles": [list(q) for q in z.income_quantiles]} for z in self.zones]
        d["coefficients"] = list(self.coefficients)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        d["coefficients"] = tuple(float(c) for c in d["coefficients"])
        d["zones"] = tuple(
            ZoneSpec(**(z | {"income_quantiles": tuple(tuple(map(float, q)) for q in z["income_quantiles"])}))
            for z in d["zones"]
        )
        return cls(**d)

    def with_(self, **changes) -> "ScenarioSpec":
        return ScenarioSpec.from_dict(self.to_dict() | changes)


def default_scenario(**overrides) -> ScenarioSpec:
    """Seven-division scenario with a clearly identified travel-cost slope."""
    q = ((0.5, 9_000.0), (0.8, 20_000.0), (0.95, 45_000.0), (1.0, 200_000.0))
    zones = (
        ZoneSpec("Barisal", 9.1e6, q, 13_000.0, 2_500.0, 19_300.0),
        ZoneSpec("Chittagong", 28.4e6, q, 26_500.0, 5_000.0, 16_100.0),
        ZoneSpec("Dhaka", 36.1e6, q, 14_000.0, 3_000.0, 34_900.0),
        ZoneSpec("Khulna", 15.7e6, q, 11_700.0, 2_500.0, 102_000.0),
        ZoneSpec("Rajshahi", 18.5e6, q, 3_800.0, 800.0, 27_700.0),
        ZoneSpec("Rangpur", 15.8e6, q, 8_200.0, 1_500.0, 16_700.0),
        ZoneSpec("Sylhet", 9.9e6, q, 16_000.0, 3_000.0, 5_100.0),
    )
    base = dict(
        coefficients=(150.0, -0.004, 30.0, -20.0, 60.0, 35.0),
        zones=zones,
        noise_sd=20.0,
        n_obs=17,
        seed=42,
    )
    return ScenarioSpec(**(base | overrides))


def load_scenario(path: str | Path) -> ScenarioSpec:
    """Read a scenario from a JSON file; keys absent from it take default values."""
    with Path(path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    if "zones" not in data:
        data["zones"] = default_scenario().to_dict()["zones"]
    if "coefficients" not in data:
        data["coefficients"] = list(default_scenario().coefficients)
    return ScenarioSpec.from_dict(data)


@dataclass(frozen=True)
class _Draw:
    zone_idx: np.ndarray
    mode_idx: np.ndarray
    costs: np.ndarray  # (n_obs, respondents_per_row)
    alone: np.ndarray
    package: np.ndarray
    income_u: np.ndarray
    noise: np.ndarray  # standard normal, scaled later


def _draw(spec: ScenarioSpec, rng: np.random.Generator) -> _Draw:
    n, m = spec.n_obs, spec.respondents_per_row
    nz = len(spec.zones)
    zone_idx = np.arange(n) % nz
    mode_idx = (np.arange(n) // nz) % len(MODES)
    means = np.array([spec.zones[z].tc_mean * _MODE_COST_FACTOR[MODES[k]] for z, k in zip(zone_idx, mode_idx)])
    sds = np.array([spec.zones[z].tc_sd for z in zone_idx])
    costs = np.abs(means[:, None] + sds[:, None] * rng.standard_normal((n, m)))
    alone = (rng.random(n) < spec.p_alone).astype(int)
    package = (rng.random(n) < spec.p_package).astype(int)
    income_u = rng.random((n, m))
    noise = rng.standard_normal(n)
    return _Draw(zone_idx, mode_idx, costs, alone, package, income_u, noise)


def _design(spec: ScenarioSpec, d: _Draw) -> tuple[np.ndarray, np.ndarray]:
    tcost = d.costs.mean(axis=1)
    air = (d.mode_idx == MODES.index("air_combined")).astype(int)
    khln = np.array([int(spec.zones[z].zone_id == KHULNA) for z in d.zone_idx])
    X = np.column_stack([np.ones(spec.n_obs), tcost, d.alone, air, khln, d.package])
    return X, air


def _noise_scale(spec: ScenarioSpec, X: np.ndarray) -> np.ndarray:
    if spec.heteroskedasticity == "tcost":
        return spec.noise_sd * X[:, 1] / X[:, 1].mean()
    if spec.heteroskedasticity == "air":
        return spec.noise_sd * (1.0 + 2.0 * X[:, 3])
    return np.full(X.shape[0], spec.noise_sd)


@dataclass(frozen=True)
class SyntheticSample:
    spec: ScenarioSpec
    dataset: Dataset
    rows: tuple[ObservationRow, ...]
    design: DesignMatrix
    v_true: np.ndarray
    coefficients: tuple[float, ...]


def _rows_from(spec: ScenarioSpec, d: _Draw, X: np.ndarray, v: np.ndarray) -> tuple[ObservationRow, ...]:
    return tuple(
        ObservationRow(
            zone_id=spec.zones[d.zone_idx[i]].zone_id,
            mode=MODES[d.mode_idx[i]],
            V=float(v[i]),
            TCost=float(X[i, 1]),
            Alone=int(X[i, 2]),
            Air=int(X[i, 3]),
            Khln=int(X[i, 4]),
            Package=int(X[i, 5]),
            respondents=spec.respondents_per_row,
        )
        for i in range(spec.n_obs)
    )


def _dataset_from(spec: ScenarioSpec, d: _Draw) -> Dataset:
    records = []
    for i in range(spec.n_obs):
        zone = spec.zones[d.zone_idx[i]]
        dist = IncomeDistribution(zone.zone_id, zone.income_quantiles, zone.population)
        top = zone.income_quantiles[-1][1]
        for j in range(spec.respondents_per_row):
            income = dist.income_at(float(d.income_u[i, j]))
            records.append(
                SurveyRecord(
                    respondent_id=f"S{i:04d}-{j:02d}",
                    visitor_kind=VisitorKind.LOCAL,
                    origin_zone=zone.zone_id,
                    travel_cost=float(d.costs[i, j]),
                    travel_mode=TravelMode(MODES[d.mode_idx[i]]),
                    alone=bool(d.alone[i]),
                    package_tour=bool(d.package[i]),
                    purpose=Purpose.RECREATION,
                    monthly_income=income if math.isfinite(income) else 1.5 * top,
                )
            )
    return Dataset.from_records(records, source=f"synthgen(seed={spec.seed})")


def generate_synthetic_survey(spec: ScenarioSpec, *, with_survey: bool = True) -> SyntheticSample:
    """Draw one sample from ``spec``.

    Observation rows satisfy ``V = X @ coefficients + noise`` exactly, with
    ``X`` built from the generated respondents (``TCost`` is each row's mean
    respondent cost, every respondent of a row shares its dummies). The
    noise-free response is returned as ``v_true``.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    return _sample(spec, rng, with_survey)


def _sample(spec: ScenarioSpec, rng: np.random.Generator, with_survey: bool) -> SyntheticSample:
    d = _draw(spec, rng)
    X, _ = _design(spec, d)
    beta = np.asarray(spec.coefficients)
    v_true = X @ beta
    v = v_true + _noise_scale(spec, X) * d.noise
    design = DesignMatrix(X, v, VGF_COLUMNS)
    dataset = _dataset_from(spec, d) if with_survey else Dataset.from_records(())
    return SyntheticSample(spec, dataset, _rows_from(spec, d, X, v), design, v_true, spec.coefficients)


def true_consumer_surplus(spec: ScenarioSpec, b: float | None = None) -> float:
    """Sum of zone triangle surpluses at slope ``b`` (default: the true slope)."""
    b = -spec.beta_tcost if b is None else b
    return math.fsum(zone_consumer_surplus(z.tc_mean, z.annual_visits, b) for z in spec.zones)


def _replicate(args: tuple[ScenarioSpec, int]) -> tuple[int, float, float, float, bool]:
    spec, rep = args
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(rep,))))
    sample = _sample(spec, rng, with_survey=False)
    try:
        fit = fit_ols(sample.design, "HC1")
    except NumericalError:
        return rep, math.nan, math.nan, math.nan, False
    j = VGF_COLUMNS.index("TCost")
    b1 = float(fit.coef[j])
    lo, hi = float(fit.ci_low[j]), float(fit.ci_high[j])
    if "perfect_fit" in fit.flags:
        lo = hi = b1
    covered = lo <= spec.beta_tcost <= hi or math.isclose(b1, spec.beta_tcost, rel_tol=1e-9)
    return rep, b1, float(covered), (true_consumer_surplus(spec, -b1) if b1 < 0 else math.nan), True


@dataclass(frozen=True)
class MonteCarloReport:
    reps: int
    valid_reps: int
    coverage_beta_tcost: float
    mean_bias_beta_tcost: float
    mean_cs: float
    true_cs: float
    mean_bias_cs: float
    cs_valid_reps: int
    seed: int
    rng: str = RNG_ALGORITHM
    spec: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def monte_carlo_recovery(spec: ScenarioSpec, reps: int = 1000, *, workers: int = 1) -> MonteCarloReport:
    """Repeatedly redraw the scenario, refit, and summarise recovery.

    Reports the share of replications whose 95% HC1 interval covers the
    true travel-cost coefficient, the mean coefficient bias, and the mean
    bias of the total consumer surplus computed with the fitted slope
    (replications with a nonnegative fitted slope have no surplus and are
    left out of that average). Results are identical for any ``workers``.
    """
    if reps < 100:
        raise ValueError("reps must be at least 100")
    tasks = [(spec, r) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [_replicate(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    ok = [r for r in results if r[4]]
    b1 = np.array([r[1] for r in ok])
    cov = np.array([r[2] for r in ok])
    cs = np.array([r[3] for r in ok if not math.isnan(r[3])])
    true_cs = true_consumer_surplus(spec)
    return MonteCarloReport(
        reps=reps,
        valid_reps=len(ok),
        coverage_beta_tcost=math.fsum(cov) / len(ok) if ok else math.nan,
        mean_bias_beta_tcost=math.fsum(b1) / len(ok) - spec.beta_tcost if ok else math.nan,
        mean_cs=math.fsum(cs) / len(cs) if len(cs) else math.nan,
        true_cs=true_cs,
        mean_bias_cs=math.fsum(cs) / len(cs) - true_cs if len(cs) else math.nan,
        cs_valid_reps=len(cs),
        seed=spec.seed,
        spec=spec.to_dict(),
    )


def rows_to_records(rows: Sequence[ObservationRow]) -> list[dict]:
    return [asdict(r) for r in rows]
