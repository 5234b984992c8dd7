"""Acceptance reporting: one PASS/FAIL line per numbered criterion."""

import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "detail": ""})
    if report.failed:
        entry["passed"] = False
        entry["detail"] = str(report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else report.longrepr).splitlines()[0]
    elif detail and entry["passed"]:
        entry["detail"] = detail


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        c = _criteria[number]
        status = "PASS" if c["passed"] else "FAIL"
        line = f"[{status}] criterion {number}: {c['title']}"
        if c["detail"]:
            line += f" ({c['detail']})"
        terminalreporter.write_line(line)
