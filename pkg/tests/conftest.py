import numpy as np
import pytest

from henon_renorm.cascade import find_cascade
from henon_renorm.critical import build_valuable_charts, locate_critical_value
from henon_renorm.henon import canonical
from henon_renorm.onedim import Tower
from henon_renorm.renorm import nested_returns

# deepest superstable parameter used for the analysed maps
DEPTH_PARAM = 7


class Pipeline:
    """Returns, critical data, valuable charts and tower for one (a, b)."""

    def __init__(self, b, N, grouping=1, charts=True):
        self.b = b
        self.cascade = find_cascade(b, DEPTH_PARAM)
        self.a = float(self.cascade.s[DEPTH_PARAM - 1])
        self.F = canonical(self.a, b)
        self.seq = nested_returns(self.F, N, grouping=grouping)
        self.crit = locate_critical_value(self.seq)
        self.charts = build_valuable_charts(self.seq, self.crit) if charts else None
        self.tower = Tower(self.seq, self.crit.v0)


@pytest.fixture(scope="session")
def cascade0():
    return find_cascade(0.0, 7)


@pytest.fixture(scope="session")
def cascade05():
    return find_cascade(0.05, 7)


@pytest.fixture(scope="session")
def pipe05():
    return Pipeline(0.05, 5)


@pytest.fixture(scope="session")
def pipe0():
    return Pipeline(0.0, 5)


@pytest.fixture(scope="session")
def pipe05_g2():
    return Pipeline(0.05, 6, grouping=2, charts=False)


@pytest.fixture(scope="session")
def bounds05(pipe05):
    from henon_renorm.onedim import verify_bounds
    return verify_bounds(pipe05.tower, pipe05.charts, pipe05.seq)


@pytest.fixture(scope="session")
def bounds0(pipe0):
    from henon_renorm.onedim import verify_bounds
    return verify_bounds(pipe0.tower, pipe0.charts, pipe0.seq)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; printed together at the end of the run."""
    def record(n, ok, detail):
        _CRITERIA[n] = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
