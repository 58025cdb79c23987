import numpy as np
import pytest

from cloudconf.catalog import VmType, default_space, enumerate_space


@pytest.fixture(scope="session")
def space():
    return default_space()


@pytest.fixture
def small_space():
    vms = [
        VmType("a.small", 2, 4.0, 10.0, 0.1),
        VmType("b.medium", 4, 16.0, 10.0, 0.2),
        VmType("c.large", 8, 32.0, 25.0, 0.4),
    ]
    return enumerate_space(vms, (1, 2, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
