import numpy as np
import pytest

from memloss import backend

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion carried by a test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        num, title = crit
        prev = _CRITERIA.get(num, ("PASS", title))[0]
        status = "PASS" if report.passed and prev == "PASS" else "FAIL"
        _CRITERIA[num] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA, key=lambda s: int(s.split(".")[0])):
        status, title = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")


@pytest.fixture(autouse=True)
def _record_criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker:
        request.node.user_properties.append(("criterion", (str(marker.args[0]), marker.args[1])))
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BACKEND_NAMES = list(backend.BACKENDS)


@pytest.fixture(params=BACKEND_NAMES)
def backend_name(request):
    return request.param
