import numpy as np
import pytest

from clusterlp.data import TimeSeriesPanel


def random_panel(rng, T=300, m=1, d=1, ar=0.5):
    """Panel with AR(1) outcome, N(0,1) shock, m controls and d drivers."""
    shock = rng.standard_normal(T)
    controls = rng.standard_normal((T, m))
    drivers = np.cumsum(rng.standard_normal((T, d)), axis=0) * 0.1 + rng.standard_normal((T, d))
    y = np.zeros(T)
    for t in range(1, T):
        y[t] = ar * y[t - 1] + (1.0 + 0.5 * drivers[t - 1, 0]) * shock[t] + 0.3 * controls[t - 1, 0] + rng.standard_normal()
    return TimeSeriesPanel(timestamps=None, y=y, shock=shock, controls=controls, drivers=drivers)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record ``(number, passed, detail)`` for the acceptance summary and print it."""
    store = request.config.stash.setdefault(_CRITERIA, {})

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_CRITERIA, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
