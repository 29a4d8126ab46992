import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from criticalflow.dyadic import build_partition
from criticalflow.fields import make_grid, transform


@pytest.fixture(scope="session")
def grid32():
    return make_grid(2, 32)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(2, 64)


@pytest.fixture(scope="session")
def grid3d():
    return make_grid(3, 16)


@pytest.fixture(scope="session")
def part32(grid32):
    return build_partition(grid32)


@pytest.fixture(scope="session")
def part64(grid64):
    return build_partition(grid64)


def random_field(grid, components=1, seed=0, band_mask=None):
    """Random real band-limited field (dealias-range confined)."""
    rng = np.random.default_rng(seed)
    f = transform(grid, rng.standard_normal((components,) + grid.shape))
    mask = grid.dealias_mask if band_mask is None else band_mask
    from criticalflow.fields import apply_multiplier

    return apply_multiplier(f, mask.astype(float))


def taylor_green_raw(grid):
    x = grid.points()
    return transform(
        grid, np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
    )
