import numpy as np
import pytest

from nervecal.calibration import BaselineCache, SimSettings
from nervecal.neuron import CableParams, build_axon, discretize

COARSE = SimSettings(dt=0.05, max_dx=100.0)


@pytest.fixture(scope="session")
def chain3():
    return discretize(build_axon(3.0), 25.0)


@pytest.fixture(scope="session")
def coarse_chain3():
    return discretize(build_axon(3.0), 100.0)


@pytest.fixture(scope="session")
def cable():
    return CableParams()


@pytest.fixture
def fresh_cache():
    return BaselineCache()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
