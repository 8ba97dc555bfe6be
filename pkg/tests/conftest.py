import numpy as np
import pytest

from orliczfb import Grid

SEED = 0x5EED
BOX2 = ((-1.0, -1.0), (1.0, 1.0))
UNIT2 = ((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def grid2():
    return Grid.unit(2, 32)


@pytest.fixture
def grid1():
    return Grid.unit(1, 64)


# verdict lines appended by test_acceptance, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
