"""Shared fixtures: solved rolls and tracked branches are expensive, cache them."""

import pytest

from zzlab.bloch import critical_branch, make_axis_grid
from zzlab.roll import Params, solve_roll


@pytest.fixture(scope="session")
def roll_02():
    return solve_roll(Params(0.2, 0.0), n_modes=32)


@pytest.fixture(scope="session")
def roll_01():
    return solve_roll(Params(0.1, 0.0), n_modes=32)


@pytest.fixture(scope="session")
def branch_02(roll_02):
    grid = make_axis_grid(0.25, 10)
    return critical_branch(roll_02, grid, J=64)
