from __future__ import annotations

from pathlib import Path

import pytest

from ztcm.survey import Purpose, SurveyRecord, TravelMode, VisitorKind

FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = FIXTURES / "golden"
PUBLISHED = FIXTURES / "published"


def make_record(rid: str, zone: str = "Dhaka", cost: float = 1000.0, purpose: str = "recreation", **kw) -> SurveyRecord:
    """Local (or, for zone 'foreign', foreign) respondent with sensible defaults."""
    kind = VisitorKind.FOREIGN if zone == "foreign" else VisitorKind.LOCAL
    base = dict(
        respondent_id=rid,
        visitor_kind=kind,
        origin_zone=zone,
        travel_cost=cost,
        travel_mode=TravelMode(kw.pop("mode", "bus")),
        alone=kw.pop("alone", False),
        package_tour=kw.pop("package_tour", True),
        purpose=Purpose(purpose),
    )
    return SurveyRecord(**(base | kw))


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


# -- acceptance summary: one PASS/FAIL line per criterion ---------------------

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or (report.when == "setup" and report.outcome != "passed")):
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "failed": [], "total": 0})
    entry["total"] += 1
    if report.outcome != "passed" or hasattr(report, "wasxfail"):
        entry["failed"].append(item.name + (" (known, xfail)" if hasattr(report, "wasxfail") else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if not e["failed"] else "FAIL"
        line = f"criterion {n:>2} {status}: {e['title']} ({e['total'] - len(e['failed'])}/{e['total']} checks)"
        if e["failed"]:
            line += " failing: " + ", ".join(e["failed"])
        terminalreporter.write_line(line)
