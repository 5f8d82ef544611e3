import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import recurlab as rl


@pytest.fixture(scope="session")
def golden():
    return rl.golden_rotation()


@pytest.fixture(scope="session")
def cat():
    return rl.cat_map()


@pytest.fixture(scope="session")
def grid1_m10():
    return rl.torus_grid(1, 10)


@pytest.fixture(scope="session")
def golden_grid_m10(golden, grid1_m10):
    return rl.discretize(golden, grid1_m10)


@pytest.fixture(scope="session")
def shift1_m10(grid1_m10):
    return rl.GridPermutation.cyclic_shift(grid1_m10, 1)


@pytest.fixture(scope="session")
def cover_m10(grid1_m10):
    return rl.build_cover(grid1_m10, 1.0 / 32.0, 0.1)


@pytest.fixture(scope="session")
def towerized_golden(golden_grid_m10, cover_m10):
    return rl.towerize(golden_grid_m10, cover_m10)


@pytest.fixture(scope="session")
def towerized_shift(shift1_m10, cover_m10):
    return rl.towerize(shift1_m10, cover_m10)


@pytest.fixture(scope="session")
def cat_grid_m5(cat):
    return rl.discretize(cat, rl.torus_grid(2, 5))


@pytest.fixture(scope="session")
def cat_grid_m7(cat):
    return rl.discretize(cat, rl.torus_grid(2, 7))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))
