import os

import numpy as np
import pytest
from hypothesis import settings

from freqrestrict.geometry import SimpleCurve
from freqrestrict.series import planted_curve

# reproducible by default; HYPOTHESIS_PROFILE=explore draws fresh examples
settings.register_profile("repro", derandomize=True, database=None)
settings.register_profile("explore", derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


@pytest.fixture(scope="session")
def planted_family():
    """phi with phi''' = t e^t, (t - 2) e^t and t^2 e^t, valid for [-1, 1]."""
    return {name: planted_curve(poly) for name, poly in
            (("t", [0.0, 1.0]), ("t-2", [-2.0, 1.0]), ("t^2", [0.0, 0.0, 1.0]))}


@pytest.fixture(scope="session")
def moment3():
    return SimpleCurve.moment(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
