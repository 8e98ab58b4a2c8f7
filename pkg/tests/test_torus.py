import numpy as np
import pytest

from toruswkb.errors import ConfigurationError
from toruswkb.torus import (TestFunction, WaveFunction, eval_test_function,
                            fourier_coefficients, harmonic_test_function, make_grid,
                            standard_suite, wave_from_coefficients)

from conftest import random_band_limited


def test_make_grid_1d():
    g = make_grid(1, 8)
    assert np.allclose(g.axis, np.array([0, 1, 2, 3, 4, 5, 6, 7]) * np.pi / 4)
    assert g.spacing == pytest.approx(np.pi / 4)


def test_make_grid_2d():
    g = make_grid(2, 16)
    assert g.shape == (16, 16)
    assert np.prod(g.shape) == 256
    assert g.spacing == pytest.approx(np.pi / 8)


@pytest.mark.parametrize("n,N", [(1, 7), (1, 9), (3, 16), (0, 16), (1, 4)])
def test_make_grid_rejects(n, N):
    with pytest.raises(ConfigurationError):
        make_grid(n, N)


def test_single_mode_coefficients():
    g = make_grid(1, 32)
    psi = WaveFunction(g, np.exp(3j * g.axis) / np.sqrt(2 * np.pi), 0.5)
    c = fourier_coefficients(psi)
    assert c.at(3) == pytest.approx(1 / np.sqrt(2 * np.pi), abs=1e-14)
    rest = np.abs(c.values).sum() - abs(c.at(3))
    assert rest < 1e-13


def test_constant_coefficients():
    g = make_grid(1, 16)
    psi = WaveFunction(g, np.full(16, 1 / np.sqrt(2 * np.pi), dtype=complex), 0.5)
    assert fourier_coefficients(psi).at(0) == pytest.approx(1 / np.sqrt(2 * np.pi))


def test_parseval_against_direct_summation():
    # independent oracle: O(N^2) DFT at N=16
    g = make_grid(1, 16)
    rng = np.random.default_rng(1)
    psi = random_band_limited(g, 0.5, rng, band=7)
    x = g.axis
    direct = np.array([np.sum(np.exp(-1j * a * x) * psi.values) * g.spacing / (2 * np.pi)
                       for a in range(-8, 8)])
    c = fourier_coefficients(psi)
    mine = np.array([c.at(a) for a in range(-8, 8)])
    assert np.abs(direct - mine).max() < 1e-12
    assert abs(c.parseval_norm_sq() - psi.norm() ** 2) < 1e-10


def test_round_trip():
    g = make_grid(1, 512)
    rng = np.random.default_rng(2)
    psi = random_band_limited(g, 0.5, rng, band=200)
    back = wave_from_coefficients(g, fourier_coefficients(psi).values, psi.hbar)
    assert np.abs(back.values - psi.values).max() < 1e-12


def test_parseval_2d():
    g = make_grid(2, 16)
    rng = np.random.default_rng(3)
    psi = random_band_limited(g, 0.5, rng, band=5)
    c = fourier_coefficients(psi)
    assert abs(c.parseval_norm_sq() - psi.norm() ** 2) < 1e-10


def test_normalization_flag():
    g = make_grid(1, 16)
    psi = WaveFunction(g, np.full(16, 123.0 + 0j), 0.25)
    assert abs(psi.normalized().norm() - 1.0) < 1e-10


def test_admissibility_flag():
    g = make_grid(1, 16)
    vals = np.ones(16, dtype=complex)
    assert WaveFunction(g, vals, hbar=0.125, ell=1.0).admissible
    assert WaveFunction(g, vals, hbar=0.25, ell=0.5).admissible
    assert not WaveFunction(g, vals, hbar=1 / 3.5, ell=1.0).admissible


def test_indicator_profile_gives_sinc():
    # phihat(q, p) = 2pi * [q=0] * 1/2 * [|p|<=1]  ->  phi(x, eta) = sin(eta)/eta
    nodes = np.linspace(-1.0, 1.0, 1025)
    phat = np.full((1, nodes.size), np.pi, dtype=complex)  # 2pi * 1/2
    phi = TestFunction(n=1, qs=np.array([[0]]), phat=phat, p_axes=(nodes,))
    etas = np.array([0.3, 1.7, 4.0, 9.1])
    expect = np.sin(etas) / etas
    got = np.array([eval_test_function(phi, 0.0, e) for e in etas])
    assert np.abs(got - expect).max() < 1e-4


def test_fourier_shift_moves_momentum():
    base = harmonic_test_function(1, [1], p_max=3.0)
    shifted = harmonic_test_function(1, [1], p_max=3.0, eta_shift=[1.5])
    pts = np.array([0.3, 1.1, 2.0])
    etas = np.array([0.2, -0.7, 1.3])
    a = base.eval(pts[:, None], etas[:, None])
    b = shifted.eval(pts[:, None], (etas + 1.5)[:, None])
    assert np.abs(a - b).max() < 1e-12


def test_real_symmetry():
    # conjugate-symmetric phihat gives real phi by construction; spot check values
    phi = harmonic_test_function(1, [2], kind="sin", p_max=2.0)
    vals = phi.eval(np.array([[0.4], [2.2]]), np.array([[0.1], [-1.0]]))
    assert np.isrealobj(vals)


def test_builtin_suite_decay():
    # |phi(x, eta)| <= C (1 + |eta|)^-2 measured over |eta| <= 50
    suite = standard_suite(1, q_max=2, p_max=4.0)
    etas = np.linspace(-50, 50, 401)
    x = np.zeros_like(etas)
    for phi in suite:
        vals = np.abs(phi.eval(x[:, None], etas[:, None]))
        near = np.abs(etas) <= 1.0
        C = 8.0 * max(vals[near].max(), 1e-12)
        assert (vals <= C / (1.0 + np.abs(etas)) ** 2 + 1e-12).all(), phi.label
