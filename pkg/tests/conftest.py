import numpy as np
import pytest

from llgiter import SpaceGrid, TimeGrid


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid2d():
    return SpaceGrid(2, 16)


@pytest.fixture
def tgrid():
    return TimeGrid(1.0, 16)


def smooth_random_field(grid, rng, kmax=3, amplitude=1.0):
    """Random superposition of low cosine modes, one 3-vector per node."""
    meshes = grid.meshes()
    out = np.zeros(grid.shape + (3,))
    for _ in range(6):
        k = rng.integers(0, kmax + 1, size=grid.dimension)
        comp = int(rng.integers(0, 3))
        prof = np.full(grid.shape, amplitude * rng.normal())
        for axis, kj in enumerate(k):
            if kj:
                prof = prof * np.cos(kj * np.pi * meshes[axis])
        out[..., comp] += prof
    return out


def smooth_random_spacetime(grid, tgrid, rng, kmax=3, amplitude=1.0):
    """Space-time field: low cosine modes with smooth time envelopes."""
    t = tgrid.nodes
    out = np.zeros((tgrid.m_steps + 1,) + grid.shape + (3,))
    for _ in range(5):
        slice_field = smooth_random_field(grid, rng, kmax, amplitude)
        envelope = np.cos(rng.uniform(0.5, 2.0) * t + rng.uniform(0, 3.0))
        out += envelope.reshape((-1,) + (1,) * (grid.dimension + 1)) * slice_field[None]
    return out
