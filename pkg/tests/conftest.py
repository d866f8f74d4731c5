"""Per-criterion PASS/FAIL report for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n)`` are grouped by n; a criterion
passes when every test carrying its number passes.
"""

import pytest

_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")
    config.stash[_OUTCOMES] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or not report.passed):
        n, title = marker.args
        passed, _ = item.config.stash[_OUTCOMES].get(n, (True, title))
        item.config.stash[_OUTCOMES][n] = (passed and report.passed, title)
    return report


def pytest_terminal_summary(terminalreporter, config):
    outcomes = config.stash[_OUTCOMES]
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        passed, title = outcomes[n]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {n:2d}: {title}")
