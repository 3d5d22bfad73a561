import numpy as np
import pytest

from crwruin import GeneralChain

REF_CHAIN = [[1 / 2, 1 / 4, 1 / 4], [1 / 3, 1 / 3, 1 / 3], [1 / 8, 1 / 8, 3 / 4]]
PATTERN_CHAIN = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.5, 0.0]]


@pytest.fixture
def ref_chain():
    return GeneralChain.from_matrix(REF_CHAIN, (0.0, 1.0, 0.0))


@pytest.fixture
def pattern_chain():
    return GeneralChain.from_matrix(PATTERN_CHAIN, (0.25, 0.5, 0.25))


def power_iterate(P, steps=5000):
    """Stationary law by brute-force matrix powers (independent of any solver)."""
    x = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(steps):
        x = x @ P
    return x


def random_general(rng, initial=True):
    rows = rng.dirichlet(np.ones(3), size=3)
    init = tuple(rng.dirichlet(np.ones(3))) if initial else None
    return GeneralChain.from_matrix(rows, init)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
