import numpy as np
import pytest

from liequad.dynamics import QuadraticState
from liequad.integrate import SolverSettings, Trajectory, integrate_quadratic

EX1 = QuadraticState(0.0, 4.0 - 1.75j, -0.1 + 2.5j, -5.0 - 5.0j)
EX1_C = 1.0
EX2 = QuadraticState(0.0, 2.0 - 1.0j, 2.0 - 1.0j, 5.0j)
EX2_C = 0.0

ACCEPTANCE_LINES = []


def tol_settings(tol):
    return SolverSettings(atol=tol, rtol=tol)


def head(traj, t_end):
    """Prefix of a forward trajectory up to ``t_end`` inclusive."""
    n = int(np.searchsorted(traj.times, t_end + 1e-9))
    return Trajectory(traj.times[:n], traj.states[:n], traj.kind, traj.meta)


@pytest.fixture(scope="session")
def ex1_100():
    return integrate_quadratic(EX1, EX1_C, (0.0, 100.0), tol_settings(1e-10))


@pytest.fixture(scope="session")
def ex1_80(ex1_100):
    return head(ex1_100, 80.0)


@pytest.fixture(scope="session")
def ex2_80():
    return integrate_quadratic(EX2, EX2_C, (0.0, 80.0), tol_settings(1e-12))


@pytest.fixture(scope="session")
def ex2_20():
    return integrate_quadratic(EX2, EX2_C, (0.0, 20.0), tol_settings(1e-10))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
