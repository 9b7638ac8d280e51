import sys
import warnings

import numpy as np
import pytest

from helmscat.geom import discretize, make_sphere, make_spheroid
from helmscat.solver import BIESolver, BoundaryCondition, PlaneWave

ALPHA = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def unit_sphere():
    return make_sphere(1.0)


@pytest.fixture(scope="session")
def spheroid():
    return make_spheroid(1.0, 1.5)


@pytest.fixture(scope="session")
def dirichlet_solver(unit_sphere):
    return BIESolver(discretize(unit_sphere, 24, 48), BoundaryCondition.dirichlet(), 1.0)


@pytest.fixture(scope="session")
def dirichlet_solution(dirichlet_solver):
    return dirichlet_solver.solve(PlaneWave(ALPHA))


@pytest.fixture(scope="session")
def coarse_dirichlet_solver(unit_sphere):
    return BIESolver(discretize(unit_sphere, 16, 32), BoundaryCondition.dirichlet(), 1.0)


@pytest.fixture(autouse=True)
def _quiet_near_surface():
    from helmscat.solver import NearSurfaceWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSurfaceWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
