import numpy as np
import pytest

from nahm import derive_type, solve
from nahm.solver import SolverOptions


SAMPLE_TYPES = [
    (["-1/2"], [1]),
    (["-3/2"], [1]),
    ([-1], [2]),
    ([-3, -1], [1, 1]),
    ([-2, 0], [1, 2]),
    ([-1, 0], [2, 1]),
    (["-5/2", "-1/2", "1/2"], [1, 1, 1]),
    ([-2, -1, 1], [1, 1, 1]),
    ([-4, 1], [2, 1]),
    ([-2, -1, 0, 1], [1, 1, 1, 1]),
]


@pytest.fixture(scope="session")
def sample_types():
    return [derive_type(p, k) for p, k in SAMPLE_TYPES]


@pytest.fixture(scope="session")
def su3_type():
    return derive_type([-3, -1], [1, 1])


@pytest.fixture(scope="session")
def su3_solved(su3_type):
    return solve(su3_type, SolverOptions(seed=0))


@pytest.fixture(scope="session")
def su2_solved():
    return {p: solve(derive_type([f"-{p}"], [1]), SolverOptions(seed=0)) for p in ("1/2", "3/2", "5/2")}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
