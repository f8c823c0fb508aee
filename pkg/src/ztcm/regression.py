"""OLS for the visit-generating function with heteroskedasticity-robust inference.

Coefficients come from a Householder QR factorisation of the design; the
normal equations are never formed here. Robust covariances are the usual
sandwich ``(X'X)^-1 X' diag(e^2) X (X'X)^-1`` (HC0) and its ``n / (n - k)``
rescaling (HC1), the latter being the default "robust SE".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from ztcm.distributions import f_sf, t_quantile, t_sf_two_sided
from ztcm.errors import NumericalError, RankDeficiencyError

logger = logging.getLogger(__name__)

__all__ = [
    "VGF_COLUMNS",
    "DesignMatrix",
    "OlsFit",
    "Inference",
    "fit_ols",
    "robust_covariance",
    "inference",
    "wald_f_test",
]

VGF_COLUMNS = ("const", "TCost", "Alone", "Air", "Khln", "Package")

CovFlavor = Literal["HC0", "HC1"]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class DesignMatrix:
    """Regressors ``X`` (first column the intercept) and response ``y``."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[1] != len(self.columns):
            raise ValueError(f"X has {X.shape[1]} columns but {len(self.columns)} names were given")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("design contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))

    @classmethod
    def with_intercept(cls, regressors: Mapping[str, Sequence[float]], y: Sequence[float], const_name: str = "const"):
        cols = list(regressors)
        n = len(y)
        X = np.column_stack([np.ones(n)] + [np.asarray(regressors[c], dtype=float) for c in cols])
        return cls(X, np.asarray(y, dtype=float), (const_name, *cols))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def has_intercept(self) -> bool:
        return any(np.all(self.X[:, j] == 1.0) for j in range(self.k))


@dataclass(frozen=True)
class Inference:
    t: np.ndarray
    p: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    t_crit: float
    infinite_t: tuple[str, ...] = ()


@dataclass(frozen=True)
class OlsFit:
    columns: tuple[str, ...]
    coef: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    xtx_inv: np.ndarray
    n: int
    k: int
    ssr: float
    r_squared: float
    root_mse: float
    cov_type: str
    robust_cov: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    wald_F: float
    wald_p: float
    flags: tuple[str, ...] = field(default=())

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    def __getitem__(self, name: str) -> float:
        return float(self.coef[self.columns.index(name)])

    def table(self) -> list[dict]:
        return [
            {
                "variable": c,
                "coef": float(self.coef[j]),
                "robust_se": float(self.se[j]),
                "t": float(self.t[j]),
                "p": float(self.p[j]),
                "ci_low": float(self.ci_low[j]),
                "ci_high": float(self.ci_high[j]),
            }
            for j, c in enumerate(self.columns)
        ]

    def to_dict(self) -> dict:
        return {
            "coefficients": self.table(),
            "n": self.n,
            "k": self.k,
            "df_resid": self.df_resid,
            "cov_type": self.cov_type,
            "F": _json_number(self.wald_F),
            "F_df": [self.k - 1, self.df_resid],
            "p_F": self.wald_p,
            "r2": self.r_squared,
            "root_mse": self.root_mse,
            "flags": list(self.flags),
        }


def _json_number(x: float):
    return x if math.isfinite(x) else None if math.isnan(x) else str(x)


def _qr_solve(design: DesignMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and ``(X'X)^-1`` via QR, with a rank check."""
    X, y = design.X, design.y
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = RANK_TOL * max(np.linalg.norm(X), 1.0)
    # a tiny |R_jj| means column j is (numerically) a combination of earlier columns
    bad = [design.columns[j] for j in range(design.k) if diag[j] <= tol]
    if bad:
        raise RankDeficiencyError(bad)
    coef = np.linalg.solve(r, q.T @ y)
    r_inv = np.linalg.solve(r, np.eye(design.k))
    return coef, r_inv @ r_inv.T


def _sandwich(X: np.ndarray, resid: np.ndarray, bread: np.ndarray, flavor: str) -> np.ndarray:
    meat = (X * (resid**2)[:, None]).T @ X
    cov = bread @ meat @ bread
    n, k = X.shape
    if flavor == "HC1":
        cov = cov * n / (n - k)
    elif flavor != "HC0":
        raise ValueError(f"unknown covariance flavor {flavor!r}")
    return 0.5 * (cov + cov.T)


def robust_covariance(design: DesignMatrix, fit: OlsFit | np.ndarray, flavor: CovFlavor = "HC1") -> np.ndarray:
    """Heteroskedasticity-consistent covariance of the OLS coefficients.

    ``fit`` may be an ``OlsFit`` or a bare residual vector.
    """
    resid = fit.residuals if isinstance(fit, OlsFit) else np.asarray(fit, dtype=float)
    if resid.shape != (design.n,):
        raise ValueError(f"residual length {resid.shape} does not match design with {design.n} rows")
    if isinstance(fit, OlsFit):
        if fit.k != design.k:
            raise ValueError("fit and design have different numbers of columns")
        bread = fit.xtx_inv
    else:
        _, bread = _qr_solve(design)
    return _sandwich(design.X, resid, bread, flavor)


def inference(coef: np.ndarray, se: np.ndarray, df_resid: int, columns: Sequence[str] | None = None) -> Inference:
    """t statistics, two-sided p-values and 95% intervals at ``df_resid``.

    A zero standard error gives an infinite t (zero t if the coefficient is
    also zero), recorded in ``infinite_t``.
    """
    if df_resid < 1:
        raise NumericalError("no residual degrees of freedom left for inference")
    coef = np.asarray(coef, dtype=float)
    se = np.asarray(se, dtype=float)
    columns = list(columns) if columns is not None else [str(j) for j in range(coef.size)]
    t = np.empty_like(coef)
    infinite = []
    for j in range(coef.size):
        if se[j] > 0:
            t[j] = coef[j] / se[j]
        elif coef[j] == 0:
            t[j] = 0.0
        else:
            t[j] = math.copysign(math.inf, coef[j])
            infinite.append(columns[j])
    p = np.array([t_sf_two_sided(float(tj), df_resid) for tj in t])
    crit = t_quantile(0.975, df_resid)
    return Inference(t, p, coef - crit * se, coef + crit * se, crit, tuple(infinite))


def wald_f_test(coef: np.ndarray, cov: np.ndarray, df_resid: int, restrict: Sequence[int]) -> tuple[float, float]:
    """Robust Wald test that the coefficients indexed by ``restrict`` are zero.

    Returns ``(F, p)`` with ``F = b' V^-1 b / q``. A zero covariance block (the
    perfect-fit case) yields ``(inf, 0.0)``; any other singular block raises.
    """
    idx = list(restrict)
    q = len(idx)
    if q < 1:
        raise ValueError("the Wald test needs at least one restriction")
    b = np.asarray(coef, dtype=float)[idx]
    v = np.asarray(cov, dtype=float)[np.ix_(idx, idx)]
    if not np.any(v):
        return (0.0, 1.0) if not np.any(b) else (math.inf, 0.0)
    try:
        c = np.linalg.cholesky(v)
    except np.linalg.LinAlgError:
        raise NumericalError("restricted covariance block is singular; Wald test undefined") from None
    z = np.linalg.solve(c, b)
    F = float(z @ z) / q
    return F, f_sf(F, q, df_resid)


def fit_ols(design: DesignMatrix, cov_type: CovFlavor = "HC1") -> OlsFit:
    """Least-squares fit with robust standard errors and a joint slope test.

    The joint test covers every column except the intercept (all-ones column).
    A saturated design (``n == k``) interpolates the data exactly; its
    coefficients and R-squared are returned but every inference field is NaN
    and the fit carries the ``saturated`` flag.
    """
    n, k = design.n, design.k
    if n < k:
        raise NumericalError(f"need at least as many observations as parameters (n={n}, k={k})")
    coef, xtx_inv = _qr_solve(design)
    fitted = design.X @ coef
    resid = design.y - fitted
    ssr = float(resid @ resid)
    if design.has_intercept:
        centred = design.y - design.y.mean()
        sst = float(centred @ centred)
    else:
        sst = float(design.y @ design.y)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    if n == k:
        nan = np.full(k, np.nan)
        return OlsFit(
            columns=design.columns, coef=coef, residuals=resid, fitted=fitted, xtx_inv=xtx_inv,
            n=n, k=k, ssr=ssr, r_squared=r2, root_mse=math.nan, cov_type=cov_type,
            robust_cov=np.full((k, k), np.nan), se=nan, t=nan, p=nan, ci_low=nan, ci_high=nan,
            wald_F=math.nan, wald_p=math.nan, flags=("saturated",),
        )
    root_mse = math.sqrt(ssr / (n - k))
    flags: list[str] = []

    # residuals at rounding level are exact zeros for the covariance
    if ssr <= n * (1e-13 * max(float(np.abs(design.y).max()), 1.0)) ** 2:
        flags.append("perfect_fit")
        cov = np.zeros((k, k))
    else:
        cov = _sandwich(design.X, resid, xtx_inv, cov_type)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    inf = inference(coef, se, n - k, design.columns)
    if inf.infinite_t:
        flags.append("infinite_t:" + ",".join(inf.infinite_t))

    intercepts = [j for j in range(k) if np.all(design.X[:, j] == 1.0)]
    slopes = [j for j in range(k) if j not in intercepts]
    if slopes:
        F, pF = wald_f_test(coef, cov, n - k, slopes)
        if math.isinf(F):
            flags.append("infinite_F")
    else:
        F, pF = math.nan, math.nan
    return OlsFit(
        columns=design.columns,
        coef=coef,
        residuals=resid,
        fitted=fitted,
        xtx_inv=xtx_inv,
        n=n,
        k=k,
        ssr=ssr,
        r_squared=r2,
        root_mse=root_mse,
        cov_type=cov_type,
        robust_cov=cov,
        se=se,
        t=inf.t,
        p=inf.p,
        ci_low=inf.ci_low,
        ci_high=inf.ci_high,
        wald_F=F,
        wald_p=pF,
        flags=tuple(flags),
    )
