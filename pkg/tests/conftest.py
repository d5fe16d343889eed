import numpy as np
import pytest

from fwheb.geometry import Ball, Ellipsoid, LevelSetQuadratic, LpBall, Simplex

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[str, str] = {}


def set_zoo(dim: int):
    """One instance of every set kind in ``dim`` dimensions."""
    q = np.linspace(1.0, 4.0, dim)
    return [
        Ball(np.zeros(dim), 1.0),
        Ball(np.full(dim, 0.3), 2.0),
        Ellipsoid(np.zeros(dim), q, 1.0),
        LevelSetQuadratic(np.zeros(dim), q[::-1], 2.0),
        LpBall(dim, 1.0, 1.5),
        Simplex(dim),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
