"""Monokinetic measures, semiclassical limits, push-forward propagation.

Measures are weighted particle clouds on the Lagrangian graph
{(x, P + grad v(P, x))}: push-forward under the Hamiltonian flow is exact on
particles, and every pairing reduces to a weighted sum.  Density values g
ride along with the particles, which realizes the backward-composition
transport formula g(t, x) = g(flow(-t) x) directly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import HamiltonianSpec, flow_points, propagate_schrodinger
from .errors import ConfigurationError
from .torus import TWO_PI, TorusGrid, hbar_is_admissible
from .weakkam import WeakKAMSolution
from .wigner import pair, wigner_transform
from .wkb import WKBState


def interpolate_gradient(sol: WeakKAMSolution, points: np.ndarray) -> np.ndarray:
    """grad v at off-grid points (n=1).

    Trigonometric interpolation of the centered-difference gradient, except
    within two grid cells of a kink where the nearest-neighbor grid value is
    used instead (kinks destroy spectral accuracy locally).
    """
    if sol.grid.n != 1:
        raise ConfigurationError("gradient interpolation implemented for n=1")
    pts = np.atleast_1d(np.asarray(points, dtype=float)) % TWO_PI
    N = sol.grid.N
    dx = sol.grid.spacing
    grad = np.asarray(sol.grad, dtype=float)
    coeff = np.fft.fft(grad) / N
    modes = sol.grid.modes
    vals = np.real(np.exp(1j * np.outer(pts, modes)) @ coeff)
    core = np.flatnonzero(np.asarray(sol.kink_core))
    if core.size:
        kink_x = core * dx
        d = np.abs((pts[:, None] - kink_x[None, :] + np.pi) % TWO_PI - np.pi)
        near = d.min(axis=1) <= 2 * dx
        if near.any():
            nearest = np.rint(pts[near] / dx).astype(int) % N
            vals[near] = grad[nearest]
    return vals


@dataclass(frozen=True)
class MonokineticMeasure:
    """Weighted particles {(x_i, eta_i, w_i)} on a weak KAM graph."""

    n: int
    xs: np.ndarray            # (M, n)
    etas: np.ndarray          # (M, n)
    weights: np.ndarray       # (M,)
    P: np.ndarray
    kam_type: str
    g: np.ndarray = None      # density values (Radon-Nikodym w.r.t. sigma_P)

    def __post_init__(self):
        for name in ("xs", "etas", "weights", "P"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.g is not None:
            gv = np.asarray(self.g, dtype=float).copy()
            gv.setflags(write=False)
            object.__setattr__(self, "g", gv)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def pair_with(self, phi) -> float:
        """sum_i w_i phi(x_i, eta_i)."""
        vals = phi.eval(self.xs, self.etas)
        return float(np.sum(self.weights * vals))

    def energies(self, Hspec: HamiltonianSpec) -> np.ndarray:
        if self.n == 1:
            return Hspec.energy(self.xs[:, 0], self.etas[:, 0])
        return Hspec.energy(self.xs, self.etas)


def monokinetic_measure(m_weights: np.ndarray, v: WeakKAMSolution, P,
                        sigma_weights: np.ndarray = None,
                        kink_mass_tol: float = 1e-6) -> MonokineticMeasure:
    """Lift grid weights to particles on the graph eta = P + grad v.

    Attaches Radon-Nikodym values g = m/sigma where sigma_weights is given
    (and positive).  Rejects measures putting more than ``kink_mass_tol``
    mass on the kink exclusion zone.
    """
    grid = v.grid
    w = np.asarray(m_weights, dtype=float)
    if w.shape != grid.shape:
        raise ConfigurationError("measure weights must live on the grid")
    total = w.sum()
    if total <= 0:
        raise ConfigurationError("measure must have positive mass")
    w = w / total
    kink_mass = float(w[np.asarray(v.kink_mask)].sum())
    if kink_mass > kink_mass_tol:
        raise ConfigurationError(
            f"measure mass {kink_mass:.3e} on the kink set exceeds {kink_mass_tol:.1e}")
    P = np.atleast_1d(np.asarray(P, dtype=float))
    sel = w > 1e-15
    if grid.n == 1:
        xs = grid.axis[sel][:, None]
        etas = (P[0] + np.asarray(v.grad)[sel])[:, None]
    else:
        X0, X1 = grid.meshgrid()
        xs = np.column_stack([X0[sel], X1[sel]])
        etas = P[None, :] + np.asarray(v.grad)[sel]
    weights = w[sel]
    g = None
    if sigma_weights is not None:
        sig = np.asarray(sigma_weights, dtype=float)
        sig = sig / sig.sum()
        sv = sig[sel]
        if (sv <= 0).any():
            raise ConfigurationError("target measure is not supported inside sigma_P")
        g = weights / sv
    return MonokineticMeasure(n=grid.n, xs=xs, etas=etas, weights=weights,
                              P=P, kam_type=v.kam_type, g=g)


def pushforward(measure: MonokineticMeasure, Hspec: HamiltonianSpec, t: float,
                dt: float) -> MonokineticMeasure:
    """Flow every particle for (signed) time t; weights and g values ride along."""
    if measure.n == 1:
        x, eta = flow_points(measure.xs[:, 0], measure.etas[:, 0], Hspec, t, dt)
        xs, etas = x[:, None], eta[:, None]
    else:
        xs, etas = flow_points(measure.xs, measure.etas, Hspec, t, dt)
    return MonokineticMeasure(n=measure.n, xs=xs, etas=etas,
                              weights=measure.weights, P=measure.P,
                              kam_type=measure.kam_type, g=measure.g)


@dataclass(frozen=True)
class LimitReport:
    """Per-hbar pairing errors of a semiclassical family against its target."""

    scenario: str
    hbars: tuple
    errors: tuple
    slope: float
    passed: bool
    raw_pairings: tuple = field(default=())   # rows (hbar, test label, lhs, rhs)

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "hbars": list(self.hbars),
                "errors": list(self.errors), "slope": self.slope,
                "pass": bool(self.passed)}

    def write(self, json_path, csv_path=None) -> None:
        with open(str(json_path), "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
        if csv_path is not None:
            with open(str(csv_path), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["hbar", "test", "wigner_pairing", "target_pairing"])
                for row in self.raw_pairings:
                    writer.writerow([repr(float(row[0])), row[1],
                                     repr(float(row[2])), repr(float(row[3]))])


def _fit_slope(hbars, errors) -> float:
    h = np.log(np.asarray(hbars, dtype=float))
    e = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    if len(h) < 2:
        return 0.0
    return float(np.polyfit(h, e, 1)[0])


def _decreasing(errors, slack: float = 1.1, floor: float = 1e-12) -> bool:
    e = list(errors)
    return all(b <= slack * a or b <= floor for a, b in zip(e, e[1:]))


def _check_admissible(hbars, ell: float):
    bad = [h for h in hbars if not hbar_is_admissible(h, ell)]
    if bad:
        raise ConfigurationError(f"inadmissible hbar values for ell={ell}: {bad}")
    if len(hbars) < 2:
        raise ConfigurationError("an hbar sweep needs at least two values")


def semiclassical_error(states, target: MonokineticMeasure, tests,
                        scenario: str = "", ell: float = 1.0) -> LimitReport:
    """Wigner-vs-target pairing error per hbar over a test suite.

    ``states``: mapping hbar -> WKBState along the admissible sequence
    (decreasing).  Passes when the max error sequence is decreasing (each
    term at most 1.1x the previous, up to a rounding floor).
    """
    hbars = sorted(states.keys(), reverse=True)
    _check_admissible(hbars, ell)
    errors, raw = [], []
    for hb in hbars:
        W = wigner_transform(states[hb].psi)
        worst = 0.0
        for phi in tests:
            lhs = pair(W, phi)
            rhs = target.pair_with(phi)
            raw.append((hb, phi.label, lhs, rhs))
            worst = max(worst, abs(lhs - rhs))
        errors.append(worst)
    return LimitReport(scenario=scenario, hbars=tuple(hbars), errors=tuple(errors),
                       slope=_fit_slope(hbars, errors), passed=_decreasing(errors),
                       raw_pairings=tuple(raw))


def propagation_error(states, target: MonokineticMeasure, Hspec: HamiltonianSpec,
                      t: float, dt_quantum: float, dt_classical: float, tests,
                      scenario: str = "", ell: float = 1.0) -> LimitReport:
    """Evolved-Wigner vs flowed-particle pairing error per hbar.

    Positive-type states propagate forward (t >= 0) and negative-type states
    backward (t <= 0); supplying the wrong sign is a hard error, matching the
    forward/backward split of the propagation theorem.
    """
    hbars = sorted(states.keys(), reverse=True)
    _check_admissible(hbars, ell)
    kam_types = {states[hb].kam_type for hb in hbars}
    if len(kam_types) != 1:
        raise ConfigurationError("mixed weak KAM types in one propagation sweep")
    kam_type = kam_types.pop()
    if t > 0 and kam_type != "positive":
        raise ConfigurationError(
            "forward propagation (t > 0) requires a positive-type state; "
            "negative-type graphs are only flow-invariant backward (t <= 0)")
    if t < 0 and kam_type != "negative":
        raise ConfigurationError(
            "backward propagation (t < 0) requires a negative-type state; "
            "positive-type graphs are only flow-invariant forward (t >= 0)")
    if abs(t) > 2:
        raise ConfigurationError(f"|t| <= 2 at desk scale, got {t}")
    flowed = pushforward(target, Hspec, t, dt_classical)
    errors, raw = [], []
    for hb in hbars:
        psi_t = propagate_schrodinger(states[hb].psi, Hspec, t, dt_quantum)
        W = wigner_transform(psi_t)
        worst = 0.0
        for phi in tests:
            lhs = pair(W, phi)
            rhs = flowed.pair_with(phi)
            raw.append((hb, phi.label, lhs, rhs))
            worst = max(worst, abs(lhs - rhs))
        errors.append(worst)
    return LimitReport(scenario=scenario, hbars=tuple(hbars), errors=tuple(errors),
                       slope=_fit_slope(hbars, errors), passed=_decreasing(errors),
                       raw_pairings=tuple(raw))


@dataclass(frozen=True)
class TimeSpaceTest:
    """Smooth f(s, x) with time derivative ft and space gradient fx (n=1)."""

    f: object
    ft: object
    fx: object
    label: str = ""


def continuity_check(g_traj: np.ndarray, sigma: MonokineticMeasure,
                     v: WeakKAMSolution, f_suite, t: float) -> float:
    """Discretized weak continuity defect along the projected flow.

    g_traj: (S+1, M) density samples g(s_k, x_i) at uniform times over [0, t]
    (or [t, 0] for t < 0) on the support points of sigma.  Returns
    max over the suite of |int sum_i [ft + fx . (P + grad v)] g sigma ds|.
    """
    g_traj = np.asarray(g_traj, dtype=float)
    S = g_traj.shape[0] - 1
    if S < 1:
        raise ConfigurationError("need at least two time samples")
    if g_traj.shape[1] != sigma.weights.size:
        raise ConfigurationError("density trajectory does not match the measure support")
    times = np.linspace(0.0, t, S + 1)
    xs = sigma.xs[:, 0]
    xi = sigma.etas[:, 0]       # P + grad v on the support
    worst = 0.0
    for test in f_suite:
        vals = np.empty(S + 1)
        for k, s in enumerate(times):
            integrand = (test.ft(s, xs) + test.fx(s, xs) * xi) * g_traj[k]
            vals[k] = float(np.sum(sigma.weights * integrand))
        total = float(np.trapezoid(vals, times))
        worst = max(worst, abs(total))
    return worst


def transported_density(g0, sigma: MonokineticMeasure, Hspec: HamiltonianSpec,
                        t: float, dt: float, nsnap: int) -> np.ndarray:
    """g(s_k, x_i) = g0(pi o flow(-s_k)(x_i, eta_i)) on the sigma support.

    Realizes the backward-composition transport formula by flowing the support
    backward; ``g0`` is a callable of position.
    """
    times = np.linspace(0.0, t, nsnap + 1)
    out = np.empty((nsnap + 1, sigma.weights.size))
    out[0] = g0(sigma.xs[:, 0])
    for k, s in enumerate(times[1:], start=1):
        x, _ = flow_points(sigma.xs[:, 0], sigma.etas[:, 0], Hspec, -s, dt)
        out[k] = g0(x)
    return out


@dataclass(frozen=True)
class PhaseSpaceTest:
    """Smooth compactly-eta-supported f(s, x, eta) with its three derivatives."""

    f: object
    ft: object
    fx: object
    feta: object
    label: str = ""


def liouville_residual(measure: MonokineticMeasure, Hspec: HamiltonianSpec,
                       test: PhaseSpaceTest, t: float, dt: float) -> float:
    """|int_0^t sum_i w_i [ft + fx.eta - feta.grad V](s, x_i(s), eta_i(s)) ds|.

    The particle discretization of the weak Liouville equation; vanishes to
    the integrator's O(dt^2) for tests vanishing at both endpoints.
    """
    nsteps = max(1, round(abs(t) / dt))
    dts = t / nsteps
    xs = measure.xs[:, 0].copy()
    etas = measure.etas[:, 0].copy()
    w = measure.weights

    def integrand(s, x, eta):
        gradV = -Hspec.force_at(x)
        vals = test.ft(s, x, eta) + test.fx(s, x, eta) * eta - test.feta(s, x, eta) * gradV
        return float(np.sum(w * vals))

    total = 0.0
    prev = integrand(0.0, xs, etas)
    for k in range(1, nsteps + 1):
        xs, etas = flow_points(xs, etas, Hspec, dts, abs(dts))
        cur = integrand(k * dts, xs, etas)
        total += 0.5 * dts * (prev + cur)
        prev = cur
    return abs(total)


def graph_distance(measure: MonokineticMeasure, sol: WeakKAMSolution) -> float:
    """sup_i |eta_i - (P + grad v(x_i))| over particles off the kink zone (n=1)."""
    P = float(measure.P[0])
    pts = measure.xs[:, 0]
    grad = interpolate_gradient(sol, pts)
    dx = sol.grid.spacing
    core = np.flatnonzero(np.asarray(sol.kink_core))
    keep = np.ones(pts.size, dtype=bool)
    if core.size:
        kink_x = core * dx
        d = np.abs((pts[:, None] - kink_x[None, :] + np.pi) % TWO_PI - np.pi)
        keep = d.min(axis=1) > 2 * dx
    if not keep.any():
        return 0.0
    return float(np.abs(measure.etas[keep, 0] - (P + grad[keep])).max())
