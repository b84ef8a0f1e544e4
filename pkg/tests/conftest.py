import numpy as np
import pytest

from hybridra.grid import GridConfig, mmtc_profile, urllc_profile


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid():
    return GridConfig()


@pytest.fixture
def profiles():
    return urllc_profile(), mmtc_profile()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
