import numpy as np
import pytest

from toruswkb.errors import ConfigurationError, GridMismatchError
from toruswkb.quantize import (PhaseSymbol, apply_weyl, compose, cv_bound_check,
                               cv_bound_constant, weyl_matrix)
from toruswkb.torus import WaveFunction, fourier_coefficients, make_grid

from conftest import random_band_limited

HBAR = 1 / 8


def dense_weyl_oracle(bfun, psi_vals, grid, hbar):
    """Direct quadrature of the midpoint/reflection quantization formula.

    (2pi)^-1 sum_kappa int e^{i(x-y)kappa} b(y, hbar kappa/2) psi(2y - x) dy,
    kappa over the grid Fourier box; O(N^2 * N) loops, used as the oracle.
    """
    N = grid.N
    x = grid.axis
    out = np.zeros(N, dtype=complex)
    for kappa in range(-N // 2, N // 2):
        integ = np.exp(-1j * kappa * x) * bfun(x, hbar * kappa / 2)
        for j in range(N):
            pv = psi_vals[(2 * np.arange(N) - j) % N]
            out[j] += np.exp(1j * kappa * x[j]) * np.sum(integ * pv) * grid.spacing / (2 * np.pi)
    return out


def test_identity_symbol():
    g = make_grid(1, 32)
    rng = np.random.default_rng(0)
    psi = random_band_limited(g, HBAR, rng, band=10)
    one = PhaseSymbol(g, lambda x, e: np.ones(np.broadcast_shapes(x.shape, e.shape)))
    out = apply_weyl(one, psi)
    assert np.abs(out.values - psi.values).max() < 1e-12


def test_mechanical_symbol_on_modes():
    g = make_grid(1, 32)
    b = PhaseSymbol(g, lambda x, e: 0.5 * e ** 2 + np.cos(x))
    for alpha in (0, 2, -3):
        psi = WaveFunction(g, np.exp(1j * alpha * g.axis), HBAR)
        out = apply_weyl(b, psi)
        expect = (HBAR ** 2 * alpha ** 2 / 2 + np.cos(g.axis)) * psi.values
        assert np.abs(out.values - expect).max() < 1e-12


def test_momentum_symbol_on_modes_and_dense_oracle():
    g = make_grid(1, 32)
    b = PhaseSymbol(g, lambda x, e: e + 0.0 * x)
    for alpha in (1, -4):
        psi = WaveFunction(g, np.exp(1j * alpha * g.axis), HBAR)
        out = apply_weyl(b, psi)
        assert np.abs(out.values - HBAR * alpha * psi.values).max() < 1e-12
    rng = np.random.default_rng(1)
    psi = random_band_limited(g, HBAR, rng, band=6)
    bfun = lambda x, e: np.sin(x) * np.exp(-e ** 2) + e
    sym = PhaseSymbol(g, bfun)
    mine = apply_weyl(sym, psi).values
    oracle = dense_weyl_oracle(bfun, psi.values, g, HBAR)
    assert np.abs(mine - oracle).max() < 1e-11


def test_weyl_matrix_identity_and_diagonal():
    g = make_grid(1, 64)
    one = PhaseSymbol(g, lambda x, e: np.ones(np.broadcast_shapes(x.shape, e.shape)))
    M = weyl_matrix(one, 8, HBAR)
    assert np.abs(M.matrix - np.eye(17)).max() < 1e-14
    eta2 = PhaseSymbol.from_eta_function(g, lambda e: e ** 2, order=2)
    M2 = weyl_matrix(eta2, 8, HBAR)
    expect = np.diag((HBAR * np.arange(-8, 9).astype(float)) ** 2)
    assert np.abs(M2.matrix - expect).max() < 1e-13


def test_weyl_matrix_sin_is_multiplication():
    g = make_grid(1, 64)
    K = 8
    M = weyl_matrix(PhaseSymbol.from_x_function(g, np.sin), K, HBAR)
    # tridiagonal coupling alpha -> alpha +- 1 with the Fourier coefficients of sin
    expect = np.zeros((17, 17), dtype=complex)
    for i in range(17):
        for j in range(17):
            if i - j == 1:
                expect[i, j] = 1 / 2j
            elif i - j == -1:
                expect[i, j] = -1 / 2j
    assert np.abs(M.matrix - expect).max() < 1e-14
    # equals the multiplication operator on band-limited states
    rng = np.random.default_rng(2)
    psi = random_band_limited(g, HBAR, rng, band=K - 2)
    coeff = fourier_coefficients(psi).values
    modes = np.arange(-K, K + 1)
    vec = coeff[modes % g.N]
    out_vec = M.matrix @ vec
    prod = np.fft.fft(np.sin(g.axis) * psi.values) / g.N
    assert np.abs(out_vec - prod[modes % g.N]).max() < 1e-12


def test_compose_x_only_symbols_commute():
    g = make_grid(1, 64)
    a = PhaseSymbol.from_x_function(g, np.sin)
    b = PhaseSymbol.from_x_function(g, lambda x: np.cos(2 * x))
    _, rem = compose(a, b, 12, HBAR)
    assert rem < 1e-10


def test_commutator_identity():
    g = make_grid(1, 64)
    K = 12
    a = PhaseSymbol.from_eta_function(g, lambda e: e, order=1)
    b = PhaseSymbol.from_x_function(g, np.sin)
    Mab, _ = compose(a, b, K, HBAR)
    Mba, _ = compose(b, a, K, HBAR)
    Mcos = weyl_matrix(PhaseSymbol.from_x_function(g, np.cos), K, HBAR)
    diff = (Mab.matrix - Mba.matrix) - (-1j * HBAR) * Mcos.matrix
    assert np.abs(diff).max() < 1e-10


def test_op_eta_squared_exact():
    g = make_grid(1, 64)
    a = PhaseSymbol.from_eta_function(g, lambda e: e, order=1)
    prod, _ = compose(a, a, 10, HBAR)
    M2 = weyl_matrix(PhaseSymbol.from_eta_function(g, lambda e: e ** 2, order=2), 10, HBAR)
    assert np.abs(prod.matrix - M2.matrix).max() < 1e-12


def test_moyal_remainder_slope():
    g = make_grid(1, 64)
    a = PhaseSymbol(g, lambda x, e: e + np.cos(x) * np.exp(-e ** 2))
    b = PhaseSymbol(g, lambda x, e: np.sin(x) * np.exp(-e ** 2 / 2))
    hbars = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    rems = [compose(a, b, 12, h)[1] for h in hbars]
    slope = np.polyfit(np.log(hbars), np.log(rems), 1)[0]
    assert abs(slope - 1.0) <= 0.3


def test_hermiticity_of_real_symbols():
    g = make_grid(1, 64)
    symbols = [
        PhaseSymbol.from_x_function(g, np.sin),
        PhaseSymbol(g, lambda x, e: 0.5 * e ** 2 + np.cos(x)),
        PhaseSymbol(g, lambda x, e: np.cos(2 * x) * np.exp(-e ** 2) + e),
    ]
    for sym in symbols:
        assert weyl_matrix(sym, 12, HBAR).hermiticity_defect() < 1e-10


@pytest.mark.parametrize("terms", [[(1, 1.0)], [(1, 1.0), (2, 0.5)]])
def test_kinetic_plus_toeplitz(terms):
    g = make_grid(1, 64)
    K = 10

    def V(x):
        return sum(c * np.cos(k * x) for k, c in terms)

    sym = PhaseSymbol(g, lambda x, e: 0.5 * e ** 2 + V(x))
    M = weyl_matrix(sym, K, HBAR)
    modes = np.arange(-K, K + 1)
    expect = np.diag(HBAR ** 2 * modes.astype(float) ** 2 / 2).astype(complex)
    vc = np.fft.fft(V(g.axis)) / g.N
    for i, bm in enumerate(modes):
        for j, am in enumerate(modes):
            expect[i, j] += vc[(bm - am) % g.N]
    assert np.abs(M.matrix - expect).max() < 1e-10


def test_cv_bound():
    g = make_grid(1, 128)
    K = 32
    cases = [
        PhaseSymbol.from_x_function(g, lambda x: np.ones_like(x)),
        PhaseSymbol.from_x_function(g, np.sin),
        PhaseSymbol(g, lambda x, e: np.cos(x) * np.exp(-e ** 2)),
    ]
    for sym in cases:
        norm, bound = cv_bound_check(sym, K, HBAR)
        assert norm <= bound
    # multiplication by sin has norm at most 1 on the truncation
    norm, _ = cv_bound_check(cases[1], K, HBAR)
    assert norm <= 1.0 + 1e-10
    assert cv_bound_constant(1) == pytest.approx(4 * np.pi / 3)


def test_truncation_too_large():
    g = make_grid(1, 32)
    sym = PhaseSymbol.from_x_function(g, np.sin)
    with pytest.raises(ConfigurationError):
        weyl_matrix(sym, 9, HBAR)


def test_grid_mismatch():
    g1, g2 = make_grid(1, 32), make_grid(1, 64)
    sym = PhaseSymbol.from_x_function(g1, np.sin)
    psi = WaveFunction(g2, np.ones(64, dtype=complex), HBAR)
    with pytest.raises(GridMismatchError):
        apply_weyl(sym, psi)


def test_fourier_data_consistency():
    from toruswkb.torus import harmonic_test_function
    g = make_grid(1, 32)
    tf = harmonic_test_function(1, [1], p_max=3.0, num_nodes=257)
    sym = PhaseSymbol.from_test_function(g, tf)
    assert sym.fourier_consistency(HBAR) < 1e-8


def test_2d_identity_and_hermiticity():
    g = make_grid(2, 16)
    rng = np.random.default_rng(3)
    psi = random_band_limited(g, HBAR, rng, band=3)
    one = PhaseSymbol(g, lambda x0, x1, e0, e1: np.ones(
        np.broadcast_shapes(x0.shape, x1.shape, e0.shape, e1.shape)))
    out = apply_weyl(one, psi)
    assert np.abs(out.values - psi.values).max() < 1e-12
    sym = PhaseSymbol(g, lambda x0, x1, e0, e1: 0.5 * (e0 ** 2 + e1 ** 2)
                      + np.cos(x0) + 0.0 * x1)
    M = weyl_matrix(sym, 3, HBAR)
    assert M.hermiticity_defect() < 1e-10
    # kinetic diagonal on the 2d mode box
    modes = M.modes
    diag = np.real(np.diag(M.matrix))
    expect = HBAR ** 2 * (modes.astype(float) ** 2).sum(axis=1) / 2
    assert np.abs(diag - expect - 0.0).max() < 1e-12   # cos x has zero mean


def test_compose_truncation_too_small():
    g = make_grid(1, 64)
    a = PhaseSymbol.from_x_function(g, lambda x: np.cos(5 * x))
    b = PhaseSymbol.from_x_function(g, lambda x: np.cos(6 * x))
    with pytest.raises(ConfigurationError):
        compose(a, b, 10, HBAR)
