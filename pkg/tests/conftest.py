import numpy as np
import pytest

from qnl.spectral import (SpectralScalar, SpectralVector, make_grid,
                          sobolev_norm, transform_forward)


@pytest.fixture
def grid2d():
    return make_grid(2, 32)


@pytest.fixture
def grid3d():
    return make_grid(3, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def smooth_scalar(grid, rng, decay=4.0):
    """Random real field with a Gaussian spectral envelope, unit L2 norm."""
    raw = transform_forward(grid, rng.standard_normal(grid.shape))
    f = SpectralScalar(grid, raw.coeffs * np.exp(-grid.k_sq / (2.0 * decay)))
    return f * (1.0 / sobolev_norm(f, 0))


def smooth_vector(grid, rng, decay=4.0):
    return SpectralVector(grid, tuple(smooth_scalar(grid, rng, decay)
                                      for _ in range(grid.dims)))


def band_limited_scalar(grid, rng, kmax):
    """Random real field supported on |k_j| <= kmax per axis."""
    f = smooth_scalar(grid, rng, decay=100.0)
    mask = np.ones(grid.shape, dtype=bool)
    for ki in grid.k:
        mask &= np.abs(ki) <= kmax
    return SpectralScalar(grid, f.coeffs * mask)
