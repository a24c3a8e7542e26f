"""Shared test configuration.

Collects the outcome of every acceptance test and prints one
``AC-n (...): PASS/FAIL`` line in the terminal summary, so the
criteria are visible even with output capture on.
"""

import re

_AC_NODE = re.compile(r"test_acceptance\.py::.*test_ac(\d+)_([a-z0-9_]+)")

_results = {}


def pytest_runtest_logreport(report):
    match = _AC_NODE.search(report.nodeid)
    if not match:
        return
    num, slug = int(match.group(1)), match.group(2)
    if report.when == "call" or (report.when == "setup" and report.failed):
        previous = _results.get(num)
        outcome = report.outcome
        if previous and previous[1] == "failed":
            return  # keep the first failure
        _results[num] = (slug.replace("_", " "), outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        label, outcome = _results[num]
        status = "PASS" if outcome == "passed" else f"FAIL ({outcome})"
        terminalreporter.write_line(f"AC-{num} ({label}): {status}")
