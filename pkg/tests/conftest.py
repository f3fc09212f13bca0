import numpy as np
import pytest

from polydense.weights import make_log_penalty_family, make_power_family


@pytest.fixture(scope="session")
def power1():
    return make_power_family(2.0, 1)


@pytest.fixture(scope="session")
def power2():
    return make_power_family(2.0, 2)


@pytest.fixture(scope="session")
def logpen1():
    return make_log_penalty_family(2.0, 1.0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """record(number, ok, detail) stores one PASS/FAIL line per criterion."""
    def record(number, ok, detail):
        line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
