import numpy as np
import pytest

from hsfcdisc.sampler import RngStream

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return RngStream(1234, ("tests",))


@pytest.fixture
def np_rng():
    return np.random.default_rng(987654321)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
