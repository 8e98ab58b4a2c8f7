import numpy as np
import pytest

from toruswkb.dynamics import hamiltonian_from_terms
from toruswkb.torus import make_grid, wave_from_coefficients
from toruswkb.weakkam import solve_weak_kam


@pytest.fixture(scope="session")
def grid512():
    return make_grid(1, 512)


@pytest.fixture(scope="session")
def pendulum512(grid512):
    return hamiltonian_from_terms(grid512, [(1, 1.0)])


@pytest.fixture(scope="session")
def kam_cache(pendulum512):
    """Weak KAM solutions for the pendulum, solved once per session."""
    cache = {}

    def get(P, direction="negative", h=0.05):
        key = (float(P), direction, h)
        if key not in cache:
            cache[key] = solve_weak_kam(pendulum512, float(P), direction, h=h,
                                        max_iter=60000, tol=1e-9)
        return cache[key]

    return get


def random_band_limited(grid, hbar, rng, band):
    coeff = np.zeros(grid.shape, dtype=complex)
    if grid.n == 1:
        for a in range(-band, band + 1):
            coeff[a % grid.N] = rng.normal() + 1j * rng.normal()
    else:
        for a in range(-band, band + 1):
            for b in range(-band, band + 1):
                coeff[a % grid.N, b % grid.N] = rng.normal() + 1j * rng.normal()
    return wave_from_coefficients(grid, coeff, hbar).normalized()
