import numpy as np
import pytest

from toruswkb.dynamics import hamiltonian_from_terms
from toruswkb.errors import ConfigurationError
from toruswkb.semiclassics import (PhaseSpaceTest, TimeSpaceTest, continuity_check,
                                   graph_distance, liouville_residual,
                                   monokinetic_measure, propagation_error, pushforward,
                                   semiclassical_error, transported_density)
from toruswkb.torus import make_grid, standard_suite
from toruswkb.weakkam import mather_data, solve_weak_kam
from toruswkb.wkb import AmplitudeSpec, build_amplitude, build_wkb

HBARS = [1 / 8, 1 / 16, 1 / 32, 1 / 64]


@pytest.fixture(scope="module")
def free_setup():
    grid = make_grid(1, 256)
    H = hamiltonian_from_terms(grid, [])
    sol = solve_weak_kam(H, 1.0, "negative", h=0.1, max_iter=500, tol=1e-12)
    return grid, H, sol


@pytest.fixture(scope="module")
def pendulum_setup(grid512, pendulum512, kam_cache):
    return grid512, pendulum512, kam_cache


def test_monokinetic_free_flat_graph(free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    mm = monokinetic_measure(w, sol, 1.0)
    assert mm.total_mass() == pytest.approx(1.0, abs=1e-14)
    assert np.abs(mm.etas - 1.0).max() < 1e-12
    assert np.ptp(mm.weights) < 1e-15


def test_monokinetic_pendulum_fixed_point(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[0] = 1.0
    mm = monokinetic_measure(w, sol, 0.0)
    assert mm.xs.shape == (1, 1)
    assert abs(mm.xs[0, 0]) < 1e-14
    assert abs(mm.etas[0, 0]) < 1e-12
    assert mm.energies(H)[0] == pytest.approx(1.0, abs=1e-10)   # = Hbar(0)


def test_monokinetic_type_independence(pendulum_setup):
    # rebuilding on v_+ instead of v_- moves no particle (support in the Aubry set)
    grid, H, cache = pendulum_setup
    w = np.zeros(grid.shape)
    w[0] = 1.0
    mm_neg = monokinetic_measure(w, cache(0.0, "negative"), 0.0)
    mm_pos = monokinetic_measure(w, cache(0.0, "positive"), 0.0)
    assert np.abs(mm_neg.etas - mm_pos.etas).max() <= 1e-6
    assert np.abs(mm_neg.xs - mm_pos.xs).max() == 0.0


def test_mass_on_kinks_rejected(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[grid.N // 2] = 1.0      # at the kink x = pi
    with pytest.raises(ConfigurationError):
        monokinetic_measure(w, sol, 0.0)


def test_semiclassical_error_free_exact(free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    spec = AmplitudeSpec(grid, w)
    states = {hb: build_wkb(1.0, sol, build_amplitude(spec, hb), hb) for hb in HBARS}
    target = monokinetic_measure(w, sol, 1.0)
    tests = standard_suite(1, q_max=2, p_max=3.0, eta_shift=[1.0])
    rep = semiclassical_error(states, target, tests, scenario="free")
    assert max(rep.errors) <= 1e-10
    assert rep.passed


def test_semiclassical_error_pendulum_decreasing(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[0] = 1.0
    spec = AmplitudeSpec(grid, w)
    states = {hb: build_wkb(0.0, sol, build_amplitude(spec, hb), hb) for hb in HBARS}
    target = monokinetic_measure(w, sol, 0.0)
    tests = standard_suite(1, q_max=2, p_max=3.0)
    rep = semiclassical_error(states, target, tests, scenario="pendulum-critical")
    assert rep.passed
    assert all(b <= a * 1.1 for a, b in zip(rep.errors, rep.errors[1:]))


def test_semiclassical_error_admissibility(free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    spec = AmplitudeSpec(grid, w)
    states = {0.125: build_wkb(1.0, sol, build_amplitude(spec, 0.125), 0.125)}
    target = monokinetic_measure(w, sol, 1.0)
    with pytest.raises(ConfigurationError):
        semiclassical_error(states, target, [], ell=1.0)   # single hbar
    bad = {1 / 3.5: None, 1 / 7.5: None}
    with pytest.raises(ConfigurationError):
        semiclassical_error(bad, target, [], ell=1.0)


def test_pushforward_free_translation(free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    mm = monokinetic_measure(w, sol, 1.0)
    fl = pushforward(mm, H, 0.7, 1e-3)
    expect = (mm.xs[:, 0] + 0.7 * 1.0) % (2 * np.pi)
    assert np.abs(fl.xs[:, 0] - expect).max() < 1e-10
    assert np.abs(fl.etas - mm.etas).max() < 1e-12
    assert fl.total_mass() == mm.total_mass()


def test_pushforward_fixed_point_invariant(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[0] = 1.0
    mm = monokinetic_measure(w, sol, 0.0)
    for t in (1.0, -1.0, 2.0):
        fl = pushforward(mm, H, t, 1e-3)
        circ = abs((fl.xs[0, 0] + np.pi) % (2 * np.pi) - np.pi)
        assert circ < 1e-8
        assert abs(fl.etas[0, 0]) < 1e-8


def test_pushforward_energy_shell_and_graph(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(2.0, "negative")
    md = mather_data(2.0, sol, H)
    mm = monokinetic_measure(md.weights, sol, 2.0, sigma_weights=md.weights)
    en0 = mm.energies(H)
    for t in (-1.0,):
        fl = pushforward(mm, H, t, 1e-3)
        drift = np.abs(fl.energies(H) - en0).max()
        assert drift <= 1e-5                      # Verlet conservation
        assert graph_distance(fl, sol) <= 1e-2    # stays on the backward graph


def test_propagation_error_free_exact(free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    spec = AmplitudeSpec(grid, w)
    states = {hb: build_wkb(1.0, sol, build_amplitude(spec, hb), hb) for hb in HBARS}
    target = monokinetic_measure(w, sol, 1.0)
    tests = standard_suite(1, q_max=2, p_max=3.0, eta_shift=[1.0])
    rep = propagation_error(states, target, H, -0.5, 1e-3, 1e-3, tests, scenario="free")
    assert max(rep.errors) <= 1e-8


def test_propagation_time_sign_gate(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[0] = 1.0
    spec = AmplitudeSpec(grid, w)
    states = {hb: build_wkb(0.0, sol, build_amplitude(spec, hb), hb)
              for hb in (1 / 8, 1 / 16)}
    target = monokinetic_measure(w, sol, 0.0)
    with pytest.raises(ConfigurationError):
        propagation_error(states, target, H, +0.5, 1e-3, 1e-3, [])
    with pytest.raises(ConfigurationError):
        propagation_error(states, target, H, -3.0, 1e-3, 1e-3, [])


def test_propagation_error_backward_decreasing(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(2.0, "negative")
    md = mather_data(2.0, sol, H)
    spec = AmplitudeSpec(grid, md.weights)
    states = {hb: build_wkb(2.0, sol, build_amplitude(spec, hb), hb) for hb in HBARS}
    target = monokinetic_measure(md.weights, sol, 2.0, sigma_weights=md.weights)
    tests = standard_suite(1, q_max=2, p_max=3.0, eta_shift=[2.3])
    rep = propagation_error(states, target, H, -0.5, 1e-3, 1e-3, tests, scenario="bwd")
    assert rep.passed


def test_continuity_free_hand_case(free_setup):
    # V = 0, g == 1, sigma uniform, f = sin(x - s), P = 1: integrand vanishes
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    mm = monokinetic_measure(w, sol, 1.0)
    suite = [TimeSpaceTest(f=lambda s, x: np.sin(x - s),
                           ft=lambda s, x: -np.cos(x - s),
                           fx=lambda s, x: np.cos(x - s), label="sin(x-s)")]
    g_traj = np.ones((21, mm.weights.size))
    assert continuity_check(g_traj, mm, sol, suite, 1.0) <= 1e-8


def test_continuity_single_particle_fixed_point(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(0.0, "negative")
    w = np.zeros(grid.shape)
    w[0] = 1.0
    mm = monokinetic_measure(w, sol, 0.0)
    win = lambda s: np.sin(np.pi * s) ** 2
    dwin = lambda s: np.pi * np.sin(2 * np.pi * s)
    suite = [TimeSpaceTest(f=lambda s, x: win(s) * np.sin(x),
                           ft=lambda s, x: dwin(s) * np.sin(x),
                           fx=lambda s, x: win(s) * np.cos(x), label="w sin")]
    g_traj = transported_density(lambda x: np.ones_like(x), mm, H, 1.0, 1e-3, 20)
    assert continuity_check(g_traj, mm, sol, suite, 1.0) <= 1e-10


def test_continuity_supercritical_richardson(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(2.0, "negative")
    md = mather_data(2.0, sol, H)
    mm = monokinetic_measure(md.weights, sol, 2.0, sigma_weights=md.weights)
    tfin = -0.5
    win = lambda s: np.sin(np.pi * s / tfin) ** 2
    dwin = lambda s: np.pi / tfin * np.sin(2 * np.pi * s / tfin)
    suite = [TimeSpaceTest(f=lambda s, x: win(s) * np.sin(x),
                           ft=lambda s, x: dwin(s) * np.sin(x),
                           fx=lambda s, x: win(s) * np.cos(x), label="w sin")]
    g0 = lambda x: 1.0 + 0.5 * np.cos(x)
    defects = []
    for nsnap in (50, 100):
        g_traj = transported_density(g0, mm, H, tfin, 1e-3, nsnap)
        defects.append(continuity_check(g_traj, mm, sol, suite, tfin))
    assert defects[1] <= defects[0] / 3.0      # O(dt^2) in the snapshot spacing


def test_liouville_residual(pendulum_setup):
    grid, H, cache = pendulum_setup
    sol = cache(2.0, "negative")
    md = mather_data(2.0, sol, H)
    mm = monokinetic_measure(md.weights, sol, 2.0, sigma_weights=md.weights)
    T = 1.0
    win = lambda s: np.sin(np.pi * s / T) ** 2
    dwin = lambda s: np.pi / T * np.sin(2 * np.pi * s / T)
    bump = lambda e: np.exp(-(e - 2.0) ** 2)
    dbump = lambda e: -2 * (e - 2.0) * np.exp(-(e - 2.0) ** 2)
    test = PhaseSpaceTest(
        f=lambda s, x, e: win(s) * np.cos(x) * bump(e),
        ft=lambda s, x, e: dwin(s) * np.cos(x) * bump(e),
        fx=lambda s, x, e: -win(s) * np.sin(x) * bump(e),
        feta=lambda s, x, e: win(s) * np.cos(x) * dbump(e), label="liouville")
    assert liouville_residual(mm, H, test, T, 1e-3) <= 1e-6


def test_limit_report_io(tmp_path, free_setup):
    grid, H, sol = free_setup
    w = np.ones(grid.shape)
    spec = AmplitudeSpec(grid, w)
    states = {hb: build_wkb(1.0, sol, build_amplitude(spec, hb), hb)
              for hb in (1 / 8, 1 / 16)}
    target = monokinetic_measure(w, sol, 1.0)
    tests = standard_suite(1, q_max=1, p_max=3.0, eta_shift=[1.0])
    rep = semiclassical_error(states, target, tests, scenario="io")
    jp, cp = tmp_path / "rep.json", tmp_path / "raw.csv"
    rep.write(jp, cp)
    import json
    data = json.loads(jp.read_text())
    assert data["scenario"] == "io"
    assert len(data["hbars"]) == 2
    assert cp.read_text().splitlines()[0] == "hbar,test,wigner_pairing,target_pairing"
