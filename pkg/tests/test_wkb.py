import json

import numpy as np
import pytest

from toruswkb.errors import AdmissibilityError, ConfigurationError
from toruswkb.torus import make_grid
from toruswkb.weakkam import solve_weak_kam
from toruswkb.dynamics import hamiltonian_from_terms
from toruswkb.wkb import (BUMP_GRAD_SUP, Amplitude, AmplitudeSpec, bump_profile,
                          build_amplitude, build_wkb, current,
                          current_divergence_test, mollifier, write_state_csv)

HBARS = [1 / 8, 1 / 16, 1 / 32, 1 / 64]


@pytest.fixture(scope="module")
def grid():
    return make_grid(1, 512)


@pytest.fixture(scope="module")
def free_solution(grid):
    H = hamiltonian_from_terms(grid, [])
    return solve_weak_kam(H, 1.0, "negative", h=0.1, max_iter=500, tol=1e-12)


@pytest.fixture(scope="module")
def pendulum_solution(grid):
    H = hamiltonian_from_terms(grid, [(1, 1.0)])
    return solve_weak_kam(H, 0.0, "negative", h=0.05, max_iter=4000, tol=1e-9)


def test_bump_profile_normalized():
    u = np.linspace(-np.pi, np.pi, 200001)
    mass = np.trapezoid(bump_profile(u), u)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert bump_profile(np.array([3.2]))[0] == 0.0
    assert bump_profile(np.array([-0.3]))[0] == bump_profile(np.array([0.3]))[0]


def test_uniform_measure_gives_constant_amplitude(grid):
    w = np.ones(grid.shape)
    spec = AmplitudeSpec(grid, w)
    for hb in (1 / 8, 1 / 64):
        a = build_amplitude(spec, hb)
        assert np.ptp(a.values) < 1e-12
        assert a.values[0] == pytest.approx(1 / np.sqrt(2 * np.pi), abs=1e-12)


def test_point_mass_amplitude_formula(grid):
    w = np.zeros(grid.shape)
    w[64] = 1.0            # x0 = 64 * dx
    x0 = grid.axis[64]
    hb = 1 / 16
    spec = AmplitudeSpec(grid, w, epsilon=0.2, gamma=0.1)
    a = build_amplitude(spec, hb)
    direct = hb ** 0.2 + mollifier(0.1, hb, grid.axis - x0)
    expect = np.sqrt(direct / a.c0)
    assert np.abs(a.values - expect).max() < 1e-12
    # peak width scales like hbar^gamma: support radius of the bump term
    diff = grid.axis[a.values ** 2 * a.c0 > hb ** 0.2 + 1e-12] - x0
    above = np.abs((diff + np.pi) % (2 * np.pi) - np.pi)
    assert above.max() <= np.pi * hb ** 0.1 + grid.spacing


def test_normalization_and_floor(grid):
    w = np.zeros(grid.shape)
    w[0] = 1.0
    spec = AmplitudeSpec(grid, w)
    for hb in HBARS:
        a = build_amplitude(spec, hb)
        assert abs(a.l2_norm() - 1.0) < 1e-10
        assert a.values.min() >= a.positivity_floor() * (1 - 1e-12)


def test_h1_scaling(grid):
    w = np.zeros(grid.shape)
    w[0] = 1.0
    eps, gam = 0.2, 0.1
    spec = AmplitudeSpec(grid, w, epsilon=eps, gamma=gam)
    lhs, rhs = [], []
    for hb in HBARS:
        a = build_amplitude(spec, hb)
        lhs.append(hb * a.grad_l2())
        rhs.append(BUMP_GRAD_SUP * hb ** (1 - eps - 2 * gam))
    assert all(l <= r for l, r in zip(lhs, rhs))
    slope = np.polyfit(np.log(HBARS), np.log(lhs), 1)[0]
    assert slope >= 1 - eps - 2 * gam - 0.05


def test_exponent_constraint():
    g = make_grid(1, 64)
    w = np.ones(g.shape)
    with pytest.raises(ConfigurationError):
        AmplitudeSpec(g, w, epsilon=0.8, gamma=0.2)
    with pytest.raises(ConfigurationError):
        AmplitudeSpec(g, w, epsilon=0.0, gamma=0.0)


def test_build_wkb_free_plane_wave(grid, free_solution):
    # V=0, v=0, a=(2pi)^-1/2, P=2, hbar=1/4 -> e^{i 8 x} / sqrt(2pi)
    H = hamiltonian_from_terms(grid, [])
    sol = solve_weak_kam(H, 2.0, "negative", h=0.1, max_iter=500, tol=1e-12)
    a = np.full(grid.shape, 1 / np.sqrt(2 * np.pi))
    st = build_wkb(2.0, sol, a, hbar=0.25)
    expect = np.exp(8j * grid.axis) / np.sqrt(2 * np.pi)
    assert np.abs(st.psi.values - expect).max() < 1e-10


def test_build_wkb_admissibility_gate(free_solution):
    a = np.full(free_solution.grid.shape, 1 / np.sqrt(2 * np.pi))
    with pytest.raises(AdmissibilityError):
        build_wkb(1.0, free_solution, a, hbar=1 / 3.5, ell=1.0)
    with pytest.raises(AdmissibilityError):
        build_wkb(0.5, free_solution, a, hbar=1 / 8, ell=1.0)


def test_pendulum_state_concentrates(grid, pendulum_solution):
    w = np.zeros(grid.shape)
    w[0] = 1.0
    a = build_amplitude(AmplitudeSpec(grid, w), 1 / 32)
    st = build_wkb(0.0, pendulum_solution, a, 1 / 32)
    assert abs(st.psi.norm() - 1.0) < 1e-10
    peak = grid.axis[np.argmax(np.abs(st.psi.values))]
    dist = abs((peak + np.pi) % (2 * np.pi) - np.pi)
    assert dist <= np.pi * (1 / 32) ** 0.1 + grid.spacing


def test_current_plane_wave(grid):
    from toruswkb.torus import WaveFunction
    alpha, hb = 3, 1 / 8
    psi = WaveFunction(grid, np.exp(1j * alpha * grid.axis) / np.sqrt(2 * np.pi), hb)
    J = current(psi)
    assert np.abs(J - hb * alpha / (2 * np.pi)).max() < 1e-12


def test_current_equals_graph_momentum_times_density(grid, free_solution):
    w = np.ones(grid.shape)
    a = build_amplitude(AmplitudeSpec(grid, w), 1 / 8)
    st = build_wkb(1.0, free_solution, a, 1 / 8)
    J = current(st.psi)
    assert np.abs(J - 1.0 * st.amplitude ** 2).max() < 1e-10


def test_divergence_pairing_free(grid, free_solution):
    w = np.ones(grid.shape)
    a = build_amplitude(AmplitudeSpec(grid, w), 1 / 8)
    st = build_wkb(1.0, free_solution, a, 1 / 8)
    assert current_divergence_test(st) < 1e-12


def test_divergence_decreasing_pendulum(grid, pendulum_solution):
    w = np.zeros(grid.shape)
    w[0] = 1.0
    spec = AmplitudeSpec(grid, w)
    defects = [current_divergence_test(build_wkb(0.0, pendulum_solution,
                                                 build_amplitude(spec, hb), hb))
               for hb in HBARS]
    assert all(b <= a * 1.02 for a, b in zip(defects, defects[1:]))


def test_weak_star_convergence(grid, pendulum_solution):
    # |int f a^2 dx - int f dm| decreasing (10% slack) for the built-in f set
    w = np.zeros(grid.shape)
    w[0] = 1.0
    spec = AmplitudeSpec(grid, w)
    fs = [np.ones_like(grid.axis), np.cos(grid.axis), np.sin(grid.axis),
          np.cos(2 * grid.axis)]
    targets = [1.0, 1.0, 0.0, 1.0]      # int f d(delta_0)
    prev = None
    for hb in HBARS:
        a = build_amplitude(spec, hb)
        errs = [abs(float(grid.integrate(f * a.values ** 2)) - t)
                for f, t in zip(fs, targets)]
        worst = max(errs)
        if prev is not None:
            assert worst <= prev * 1.1
        prev = worst


def test_state_csv_dump(tmp_path, grid, pendulum_solution):
    w = np.zeros(grid.shape)
    w[0] = 1.0
    a = build_amplitude(AmplitudeSpec(grid, w), 1 / 8)
    st = build_wkb(0.0, pendulum_solution, a, 1 / 8)
    path = tmp_path / "state.csv"
    write_state_csv(path, st)
    meta = json.loads((tmp_path / "state.json").read_text())
    assert meta["weak_kam_type"] == "negative"
    assert meta["hbar"] == 1 / 8
    assert path.read_text().splitlines()[0] == "x,re_psi,im_psi,a,phase"
