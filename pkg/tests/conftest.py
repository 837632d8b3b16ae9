import pytest

from dyadic_morrey.core.cubes import GridGeometry
from dyadic_morrey.core.splitmix import SplitMix64
from dyadic_morrey.ensembles import random_ensemble


@pytest.fixture
def line():
    """n = 1 down to level 6: 64 cells."""
    return GridGeometry.create(1, 0, 6)


@pytest.fixture
def plane():
    """n = 2 down to level 3: 64 cells."""
    return GridGeometry.create(2, 0, 3)


@pytest.fixture
def shifted():
    """A base cube of side 2 (j_min = -1)."""
    return GridGeometry.create(1, -1, 4)


@pytest.fixture
def rng():
    return SplitMix64(42)


@pytest.fixture
def functions(line):
    return random_ensemble(line, 12, seed=7)


@pytest.fixture
def planar_functions(plane):
    return random_ensemble(plane, 6, seed=11)
