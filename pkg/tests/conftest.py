import math

import numpy as np
import pytest

from randnls.grid import Field, make_grid


def random_field(grid, seed=0, kmax=None):
    """Complex Gaussian spectrum, optionally band-limited to |xi| <= kmax."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if kmax is not None:
        spec = spec * (grid.xi_abs <= kmax)
    return Field(grid, spec, "frequency")


@pytest.fixture
def grid1():
    return make_grid(1, 64, 16 * math.pi)


@pytest.fixture
def grid2():
    return make_grid(2, 32, 8 * math.pi)


@pytest.fixture
def grid3():
    return make_grid(3, 16, 4 * math.pi)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
