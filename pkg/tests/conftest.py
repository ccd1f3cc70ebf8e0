import numpy as np
import pytest

import vexcap as vx


@pytest.fixture
def unit_line():
    return vx.build_grid(1, (0.0, 1.0), 0.01)


@pytest.fixture
def unit_square():
    return vx.build_grid(2, [(0.0, 1.0), (0.0, 1.0)], 1.0 / 32)


def random_smooth_field(rng, grid, terms=4, amplitude=1.0):
    """Band-limited random field, used where tests need generic smooth data."""
    coords = grid.coords()
    acc = np.zeros(grid.shape)
    for _ in range(terms):
        ks = rng.integers(1, 5, grid.dim)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.zeros(grid.shape)
        for k, c in zip(ks, coords):
            wave = wave + k * c
        acc += rng.normal() * amplitude * np.sin(np.pi * wave + phase)
    return vx.GridFunction(grid, acc)
