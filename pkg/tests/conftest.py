import numpy as np
import pytest

from resonance import make_basis


@pytest.fixture
def interval16():
    return make_basis("interval", 16)


@pytest.fixture
def circle16():
    return make_basis("circle", 16)


@pytest.fixture
def square8():
    return make_basis("square", 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
