"""Chi-square independence tests and one-way ANOVA for visitor profiles.

Both tests accept summary inputs because survey reports usually publish only
percentages per visitor type and group means/SDs.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ztcm.distributions import chi2_sf, f_sf

__all__ = [
    "ContingencyTable",
    "GroupSummary",
    "TestResult",
    "contingency_from_shares",
    "contingency_from_records",
    "chi_square_independence",
    "one_way_anova",
    "one_way_anova_raw",
    "ProfileBlock",
    "parse_profile_blocks",
]


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation with categories as rows and groups as columns."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2:
            raise ValueError("counts must be a 2-D matrix")
        if counts.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(f"counts shape {counts.shape} does not match labels")
        if counts.shape[0] < 2 or counts.shape[1] < 2:
            raise ValueError("a contingency table needs at least 2 rows and 2 columns")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("cell counts must be finite and nonnegative")
        if counts.sum() <= 0:
            raise ValueError("contingency table total must be positive")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class GroupSummary:
    """Per-group sample size, mean and standard deviation (n - 1 divisor)."""

    labels: tuple[str, ...]
    n: tuple[int, ...]
    mean: tuple[float, ...]
    sd: tuple[float, ...]

    def __post_init__(self) -> None:
        k = len(self.labels)
        if not (len(self.n) == len(self.mean) == len(self.sd) == k):
            raise ValueError("labels, n, mean and sd must have equal length")
        if k < 2:
            raise ValueError("ANOVA needs at least 2 groups")
        if any(n < 2 for n in self.n):
            raise ValueError("each group needs n >= 2")
        if any(s < 0 for s in self.sd):
            raise ValueError("standard deviations must be nonnegative")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: tuple[int, ...]
    p: float
    degenerate: bool = False
    details: dict = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class


def contingency_from_shares(
    group_sizes: Mapping[str, float],
    percentages: Mapping[str, Sequence[float]],
    categories: Sequence[str],
    *,
    integer_counts: bool = False,
    tolerance: float = 0.5,
) -> ContingencyTable:
    """Rebuild a table of counts from per-group category percentages.

    Cells are ``group_size * pct / 100``. Published percentages are usually
    rounded from whole respondents; ``integer_counts=True`` rounds each cell
    back to the nearest integer, which recovers the original table whenever
    the rounded cells still add up to the group size.

    Args:
        group_sizes: respondents per group, e.g. ``{"foreign": 52, "local": 369}``.
        percentages: per group, one percentage per category (same order as
            ``categories``); each group must sum to 100 within ``tolerance``.
        categories: row labels.
    """
    groups = list(group_sizes)
    if len(groups) < 2:
        raise ValueError("at least 2 groups are required to build a contingency table")
    if set(percentages) != set(groups):
        raise ValueError("percentages must be given for exactly the groups in group_sizes")
    cols = []
    for g in groups:
        pct = np.asarray(percentages[g], dtype=float)
        if pct.shape != (len(categories),):
            raise ValueError(f"group {g!r}: expected {len(categories)} percentages, got {pct.size}")
        if abs(pct.sum() - 100.0) > tolerance:
            raise ValueError(f"group {g!r}: percentages sum to {pct.sum():.2f}, not 100 +/- {tolerance}")
        cells = group_sizes[g] * pct / 100.0
        if integer_counts:
            cells = np.floor(cells + 0.5)
        cols.append(cells)
    return ContingencyTable(tuple(categories), tuple(groups), np.column_stack(cols))


def contingency_from_records(rows: Sequence[object], cols: Sequence[object]) -> ContingencyTable:
    """Cross-tabulate two parallel label sequences; ``None`` pairs are skipped."""
    pairs = [(str(r), str(c)) for r, c in zip(rows, cols, strict=True) if r is not None and c is not None]
    row_labels = tuple(sorted({r for r, _ in pairs}))
    col_labels = tuple(sorted({c for _, c in pairs}))
    counts = np.zeros((len(row_labels), len(col_labels)))
    ri = {r: i for i, r in enumerate(row_labels)}
    ci = {c: j for j, c in enumerate(col_labels)}
    for r, c in pairs:
        counts[ri[r], ci[c]] += 1
    return ContingencyTable(row_labels, col_labels, counts)


def chi_square_independence(table: ContingencyTable) -> TestResult:
    """Pearson chi-square test of independence, no continuity correction."""
    obs = table.counts
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if np.any(row == 0) or np.any(col == 0):
        raise ValueError("chi-square test undefined: a row or column margin is zero")
    expected = np.outer(row, col) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return TestResult(stat, (df,), chi2_sf(stat, df), details={"expected": expected})


def one_way_anova(groups: GroupSummary) -> TestResult:
    """One-way ANOVA F test computed from group summaries.

    When the within-group sum of squares is zero but the means differ, F is
    infinite; the result then carries ``p = 0`` and ``degenerate=True``.
    """
    n = np.asarray(groups.n, dtype=float)
    mean = np.asarray(groups.mean, dtype=float)
    sd = np.asarray(groups.sd, dtype=float)
    k = len(n)
    total = n.sum()
    grand = float((n * mean).sum() / total)
    ssb = float((n * (mean - grand) ** 2).sum())
    ssw = float(((n - 1) * sd**2).sum())
    df1, df2 = k - 1, int(total) - k
    details = {"ssb": ssb, "ssw": ssw, "grand_mean": grand}
    if ssw == 0.0:
        if ssb == 0.0:
            return TestResult(0.0, (df1, df2), 1.0, degenerate=True, details=details)
        return TestResult(math.inf, (df1, df2), 0.0, degenerate=True, details=details)
    stat = (ssb / df1) / (ssw / df2)
    return TestResult(stat, (df1, df2), f_sf(stat, df1, df2), details=details)


def one_way_anova_raw(samples: Mapping[str, Sequence[float]]) -> TestResult:
    """Convenience wrapper: summarise raw samples then run ``one_way_anova``."""
    labels = tuple(samples)
    arrays = [np.asarray(samples[g], dtype=float) for g in labels]
    summary = GroupSummary(
        labels=labels,
        n=tuple(a.size for a in arrays),
        mean=tuple(float(a.mean()) for a in arrays),
        sd=tuple(float(a.std(ddof=1)) for a in arrays),
    )
    return one_way_anova(summary)


@dataclass(frozen=True)
class ProfileBlock:
    kind: str  # "table" or "anova"
    name: str
    table: ContingencyTable | None = None
    groups: GroupSummary | None = None

    def run(self) -> TestResult:
        if self.kind == "table":
            return chi_square_independence(self.table)
        return one_way_anova(self.groups)


_BLOCK_HEADER = re.compile(r"^\[(table|anova)\s+([^\]\s]+)((?:\s+[^\]\s]+)*)\]$")


def parse_profile_blocks(text: str) -> list[ProfileBlock]:
    """Parse CSV blocks describing contingency tables and group summaries.

    Each block opens with ``[table NAME]`` or ``[anova NAME]`` followed by a
    CSV header and data lines; blocks are separated by the next opener.
    Lines starting with ``#`` are ignored.

    A table block's header is ``category,<group>,<group>...``. If its first
    data line is ``n,<size>,<size>...`` the remaining cells are percentages
    per group and are turned into counts; add the ``round`` option
    (``[table sex round]``) to round them to whole respondents. Otherwise the
    cells are counts. An anova block's header is ``group,n,mean,sd``.
    """
    blocks: list[tuple[str, str, set[str], list[list[str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _BLOCK_HEADER.match(line)
        if m:
            blocks.append((m.group(1), m.group(2), set(m.group(3).split()), []))
            continue
        if not blocks:
            raise ValueError(f"line {lineno}: data before the first [table ...] or [anova ...] header")
        blocks[-1][3].append([c.strip() for c in next(csv.reader([line]))])

    out = []
    for kind, name, opts, lines in blocks:
        if len(lines) < 2:
            raise ValueError(f"block {name!r} has no data lines")
        header, data = lines[0], lines[1:]
        if kind == "anova":
            if [h.lower() for h in header] != ["group", "n", "mean", "sd"]:
                raise ValueError(f"anova block {name!r}: header must be group,n,mean,sd")
            groups = GroupSummary(
                labels=tuple(r[0] for r in data),
                n=tuple(int(r[1]) for r in data),
                mean=tuple(float(r[2]) for r in data),
                sd=tuple(float(r[3]) for r in data),
            )
            out.append(ProfileBlock(kind, name, groups=groups))
            continue
        group_labels = header[1:]
        if data[0][0].lower() == "n":
            sizes = {g: float(v) for g, v in zip(group_labels, data[0][1:], strict=True)}
            cats = [r[0] for r in data[1:]]
            pcts = {g: [float(r[j + 1]) for r in data[1:]] for j, g in enumerate(group_labels)}
            table = contingency_from_shares(sizes, pcts, cats, integer_counts="round" in opts)
        else:
            counts = np.array([[float(v) for v in r[1:]] for r in data])
            table = ContingencyTable(tuple(r[0] for r in data), tuple(group_labels), counts)
        out.append(ProfileBlock(kind, name, table=table))
    return out
