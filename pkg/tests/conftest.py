"""Shared pytest configuration: acceptance-criterion result reporting."""

import re

_CRITERIA_TITLES = {
    1: "rules oracle equivalence (3x3 exhaustive to depth 6)",
    2: "confidence-interval exactness and coverage",
    3: "doubling-sweep direction (2-vs-1 strength)",
    4: "parallel efficiency (throughput scaling, lock modes)",
    5: "parallel-search invariants under stress",
    6: "affinity mapper reference layouts",
    7: "microbenchmark integrity",
    8: "probe monotonicity and consistency",
    9: "GTP conformance",
}

_results = {}

_PATTERN = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match or "test_acceptance" not in report.nodeid:
        return
    num = int(match.group(1))
    if report.when == "call":
        _results[num] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup":
        if report.skipped:
            _results[num] = "SKIP"
        elif report.failed:
            _results[num] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_results):
        title = _CRITERIA_TITLES.get(num, "")
        terminalreporter.write_line(f"criterion {num}: {_results[num]}  ({title})")
