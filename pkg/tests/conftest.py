import numpy as np
import pytest

from antiisrj.harness import resolve_config
from antiisrj.siggen import ComplexSignal


@pytest.fixture(scope="session")
def table1():
    return resolve_config("table1")


@pytest.fixture(scope="session")
def table2():
    return resolve_config("table2")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_chirp(n=256, dt=1.0 / 16, m=0.7, q=0.3, width=1.0):
    """Smooth, effectively band-limited test signal centred on t = 0."""
    t0 = -n / 2 * dt
    t = t0 + dt * np.arange(n)
    x = np.exp(-(t / width) ** 2 / 2) * np.exp(1j * (m * t + q * t * t))
    return ComplexSignal(x, 1.0 / dt, t0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
