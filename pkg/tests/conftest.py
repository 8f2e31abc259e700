"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_outcomes: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, summary = marker.args
    failed = report.failed
    if report.when == "call" or failed:
        prev = _outcomes.get(number, ("PASS", summary))[0]
        status = "FAIL" if failed or prev == "FAIL" else "PASS"
        if report.skipped:
            status = "SKIP"
        _outcomes[number] = (status, summary)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, summary = _outcomes[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {summary}")
