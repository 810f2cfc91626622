import numpy as np
import pytest

from fpu_lindstedt import LatticeConfig, ModeState

# initial data of the N = 2 worked example
N2_EXAMPLE_ICS = ModeState([0.1, 1.0], [0.1, 0.0])
N2_EXAMPLE_CONFIG = LatticeConfig(2, 0.1)


@pytest.fixture
def n2_example_ics():
    return N2_EXAMPLE_ICS


@pytest.fixture
def n2_example_config():
    return N2_EXAMPLE_CONFIG


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


def random_ics(rng, n, amp=0.5):
    return ModeState(rng.uniform(-amp, amp, n), rng.uniform(-amp, amp, n))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
