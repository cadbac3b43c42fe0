import numpy as np
import pytest

from parmonodromy.systems import LinearSystem, RationalMatrix


@pytest.fixture
def gauge_triple():
    """A with a double pole at x = t, the gauge P and the simple-pole system B."""
    A = LinearSystem(2, [("t", [[[0, -3], [0, 0]], [["t", 0], [0, "t-2"]]])])
    P = RationalMatrix(2, [("t", [[[0, -1], [0, 0]], [[1, 0], [0, 0]]])], [[[0, 0], [0, "-t"]], [[0, 0], [0, 1]]])
    B = LinearSystem(2, [("t", [[["t-1", 0], [0, "t-1"]]])])
    return A, B, P


@pytest.fixture
def commuting_pair():
    B0 = np.diag([1 / 3, -1 / 3])
    return LinearSystem.fuchsian([0, 1], [B0, -B0])


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
