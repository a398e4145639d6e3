import numpy as np
import pytest

from hamlin.model import (builtin_euler, builtin_lotka_volterra,
                          rescaled_system)

# filled by test_acceptance; echoed after the run so the per-criterion
# verdict lines always appear in the terminal log
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lv():
    return builtin_lotka_volterra()


@pytest.fixture(scope="session")
def euler():
    return builtin_euler(1.0, 2.0, 3.0)


@pytest.fixture(scope="session")
def euler_rescaled(euler):
    return rescaled_system(euler)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
