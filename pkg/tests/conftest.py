import numpy as np
import pytest

from revgs.domain import Grid, State
from revgs.model import Params


@pytest.fixture
def unit_params():
    return Params()


@pytest.fixture
def grid64():
    return Grid.interval(64)


def smooth_state(grid: Grid, t: float = 0.0) -> State:
    """Positive, smooth, non-homogeneous test data."""
    x = grid.centers()[0] / grid.extent[0]
    u = np.stack([
        1.0 + 0.5 * np.cos(np.pi * x),
        0.8 + 0.3 * np.cos(2 * np.pi * x),
        0.5 + 0.2 * np.cos(np.pi * x),
        1.2 - 0.4 * np.cos(3 * np.pi * x),
    ])
    return State(grid, u, t)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
