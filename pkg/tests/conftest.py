"""Shared fixtures.

Eigenvalue solves dominate the suite's runtime, so the standard potentials
and their solved spectra are session-scoped and reused across modules.
"""

import pytest

from qhjlab.potentials import Harmonic, InfiniteWell, Step
from qhjlab.schrodinger import Grid, find_bound_eigenvalues


@pytest.fixture(scope="session")
def well():
    return InfiniteWell(1.0)


@pytest.fixture(scope="session")
def well_grid():
    return Grid(0.0, 1.0, 2001)


@pytest.fixture(scope="session")
def well_grid_fine():
    return Grid(0.0, 1.0, 4001)


@pytest.fixture(scope="session")
def well_solutions(well, well_grid):
    return find_bound_eigenvalues(well, well_grid, 3)


@pytest.fixture(scope="session")
def harmonic():
    return Harmonic(1.0, -4.5, 4.5)


@pytest.fixture(scope="session")
def harmonic_grid():
    return Grid(-4.5, 4.5, 2001)


@pytest.fixture(scope="session")
def harmonic_solutions(harmonic, harmonic_grid):
    return find_bound_eigenvalues(harmonic, harmonic_grid, 2)


@pytest.fixture(scope="session")
def step():
    return Step(0.75, -20.0, 20.0)


@pytest.fixture(scope="session")
def step_grid():
    return Grid(-20.0, 20.0, 4001)
