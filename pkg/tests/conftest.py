from collections import defaultdict

import pytest

_outcomes: dict[int, list[bool]] = defaultdict(list)
_titles: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    _titles[number] = title
    if report.when == "call" or (report.when == "setup" and report.failed):
        _outcomes[number].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        results = _outcomes[number]
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(
            f"criterion {number:2d} {status}  {_titles[number]}  ({sum(results)}/{len(results)} checks)"
        )
