import functools

import pytest

from vssea.experiments import get_scenario, run_scenario
from vssea.vsam import default_config

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.failed):
        number, title = marker.args
        entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": []})
        entry["passed"] &= report.passed
        entry["tests"].append(item.name)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry['title']}")


@functools.lru_cache(maxsize=None)
def run_catalog_entry(name):
    """Catalog scenarios are deterministic, so one run per session is enough."""
    return run_scenario(get_scenario(name))


@pytest.fixture(scope="session")
def vsam_config():
    return default_config()


@pytest.fixture(scope="session")
def scenario_run():
    return run_catalog_entry
