import numpy as np
import pytest

from exactqft.sim import RegisterLayout, StateVector

# acceptance criterion number -> (title, outcome)
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, "PASS"])
    if rep.failed:
        entry[1] = "FAIL"
    elif rep.skipped and rep.when == "setup":
        entry[1] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(layout: RegisterLayout, rng) -> StateVector:
    size = 1 << layout.total_qubits
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return StateVector(layout, v / np.linalg.norm(v))
