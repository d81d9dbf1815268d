"""Collects acceptance-criterion outcomes and prints one verdict line per criterion."""

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when == "teardown":
        return
    if report.when == "setup" and report.passed:
        return
    number, title = marker.args
    details = [v for k, v in item.user_properties if k == "detail"]
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    prev = _RESULTS.get(number)
    if prev:
        # several tests may share a criterion: any failure wins, details accumulate
        status = "FAIL" if "FAIL" in (prev[0], status) else status
        details = prev[2] + details
    _RESULTS[number] = (status, title, details)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title, details = _RESULTS[number]
        line = f"criterion {number} {status}: {title}"
        if details:
            line += " | " + "; ".join(details)
        tr.write_line(line)
