"""Discrete Lax-Oleinik semigroups, weak KAM solutions and Mather diagnostics.

The one-step operator replaces curves by straight segments:

    (T_h^- u)(x) = min_y { u(y) + h [ |(x-y)/h|^2 / 2 - V((x+y)/2) ] - P.(x-y) }

with the displacement reduced to its minimal-norm representative and y
ranging over grid points within a search radius; the positive semigroup is

    (T_h^+ u)(x) = max_y { u(y) - h [ |(x-y)/h|^2 / 2 - V((x+y)/2) ] - P.(x-y) },

the max form with the same one-step action (time-reversing the twisted action
flips the kinetic and potential terms but keeps the momentum term, which is
what makes v_+(P, x) = -v_-(-P, x) up to a constant and keeps the graph of
P + grad v_+ on the energy shell).  Midpoint evaluation of V makes
the one-step action second-order accurate; a parabolic refinement of the
discrete extremum removes the leading grid error.  The Lagrangian here is
L(x, xi) = |xi|^2/2 - V(x), the Legendre dual of H = |eta|^2/2 + V.

Fixed points satisfy T_h v = v -+ h Hbar(P); iteration stops when successive
differences are constant in sup norm.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .dynamics import HamiltonianSpec, flow_points
from .errors import ConfigurationError, ConvergenceError
from .torus import TWO_PI, TorusGrid

NEGATIVE = "negative"
POSITIVE = "positive"


@dataclass(frozen=True)
class WeakKAMSolution:
    """Grid solution of H(x, P + grad v) = Hbar(P) of negative or positive type."""

    grid: TorusGrid
    P: np.ndarray
    kam_type: str
    v: np.ndarray
    Hbar: float
    grad: np.ndarray          # (N,) for n=1, (N, N, 2) for n=2
    kink_mask: np.ndarray     # kink flags dilated by 2 cells (gradient exclusion zone)
    residual: float
    h: float
    iterations: int
    kink_core: np.ndarray = None   # raw (undilated) kink flags

    def __post_init__(self):
        if self.kink_core is None:
            object.__setattr__(self, "kink_core", np.asarray(self.kink_mask).copy())
        for name in ("v", "grad", "kink_mask", "P", "kink_core"):
            arr = np.asarray(getattr(self, name))
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def kink_locations(self) -> np.ndarray:
        """Cluster the raw kink flags into site coordinates (n=1)."""
        if self.grid.n != 1:
            raise ConfigurationError("kink clustering implemented for n=1 only")
        flags = np.flatnonzero(np.asarray(self.kink_core))
        if flags.size == 0:
            return np.empty(0)
        N = self.grid.N
        groups = []
        current = [flags[0]]
        for idx in flags[1:]:
            if idx - current[-1] <= 2:
                current.append(idx)
            else:
                groups.append(current)
                current = [idx]
        groups.append(current)
        # merge a group wrapping around the origin
        if len(groups) > 1 and (groups[0][0] + N - groups[-1][-1]) <= 2:
            groups[0] = groups.pop() + groups[0]
        locs = []
        for g in groups:
            angles = np.exp(1j * TWO_PI * np.asarray(g) / N)
            locs.append(float(np.angle(angles.mean()) % TWO_PI))
        return np.asarray(sorted(locs))

    def hj_defect(self, Hspec: HamiltonianSpec) -> float:
        """sup over unmasked points of | |P + grad v|^2/2 + V - Hbar |."""
        V = Hspec.potential_grid()
        if self.grid.n == 1:
            val = 0.5 * (float(self.P[0]) + self.grad) ** 2 + V - self.Hbar
        else:
            xi0 = self.P[0] + self.grad[..., 0]
            xi1 = self.P[1] + self.grad[..., 1]
            val = 0.5 * (xi0 ** 2 + xi1 ** 2) + V - self.Hbar
        ok = ~np.asarray(self.kink_mask)
        return float(np.abs(val[ok]).max())


def _search_width(grid: TorusGrid, Hspec: HamiltonianSpec, h: float, P, grad_guess=None) -> int:
    Pn = float(np.linalg.norm(np.atleast_1d(P)))
    if grad_guess is None:
        osc = max(Hspec.max_potential() - Hspec.min_potential(), 0.0)
        grad_guess = Pn + np.sqrt(2.0 * osc) + 1.0
    radius = h * (Pn + grad_guess + 2.0)
    if radius >= np.pi:
        raise ConfigurationError(
            f"search radius {radius:.3f} exceeds half the torus; reduce h")
    W = int(np.ceil(radius / grid.spacing))
    return max(W, 2)


def lax_oleinik_step(u, Hspec: HamiltonianSpec, h: float, P, direction: str,
                     grad_guess=None, refine: bool = True,
                     _vhalf=None, _W=None) -> np.ndarray:
    """One application of T_h^- (direction 'negative') or T_h^+ ('positive')."""
    if not (0 < h <= 1):
        raise ConfigurationError(f"time step must lie in (0, 1], got {h}")
    u = np.asarray(u, dtype=float)
    if not np.isfinite(u).all():
        raise ConfigurationError("grid values must be finite")
    grid = Hspec.grid
    sign = -1 if direction == NEGATIVE else +1
    if direction not in (NEGATIVE, POSITIVE):
        raise ConfigurationError(f"direction must be 'negative' or 'positive', got {direction}")
    vhalf = Hspec.potential_half_grid() if _vhalf is None else _vhalf
    W = _search_width(grid, Hspec, h, P, grad_guess) if _W is None else _W
    if grid.n == 1:
        return kernels.lax_step_1d(u, vhalf, h, float(np.atleast_1d(P)[0]), W, sign, refine)
    return kernels.lax_step_2d(u, vhalf, h, np.atleast_1d(P).astype(float), W, sign)


def solve_weak_kam(Hspec: HamiltonianSpec, P, direction: str = NEGATIVE,
                   h: float = 0.05, max_iter: int = 20000, tol: float = 1e-9,
                   grad_guess=None, kink_factor: float = 10.0,
                   plateau_window: int = 256) -> WeakKAMSolution:
    """Iterate the discrete semigroup to its additive fixed point.

    Convergence is declared when u_{k+1} - u_k is constant across the grid to
    ``tol`` in sup norm; the constant then equals -+ h Hbar(P).  On rotational
    (supercritical) orbits the discrete semigroup settles into a stationary
    min-plus cycle instead of a fixed point: when the oscillation amplitude
    stops decreasing, the solution and the additive constant are taken as
    window averages over one plateau, with the plateau amplitude reported as
    the residual.

    The solution is normalized to v(0) = 0, the gradient is taken by centered
    differences, and kinks are flagged where the absolute second difference
    exceeds ``kink_factor`` times its median.
    """
    grid = Hspec.grid
    P = np.atleast_1d(np.asarray(P, dtype=float))
    ell = Hspec.ell
    if np.abs(P / ell - np.round(P / ell)).max() > 1e-9:
        raise ConfigurationError(f"P={P} not on the momentum lattice ell Z^n (ell={ell})")
    u = np.zeros(grid.shape)
    vhalf = Hspec.potential_half_grid()
    W = _search_width(grid, Hspec, h, P, grad_guess)
    converged = False
    osc = np.inf
    mean_delta = 0.0
    osc_window: list = []
    osc_window_prev_min = np.inf
    averaging = 0
    u_sum = None
    delta_sum = 0.0
    for it in range(1, max_iter + 1):
        u_next = lax_oleinik_step(u, Hspec, h, P, direction, _vhalf=vhalf, _W=W)
        delta = u_next - u
        osc = float(np.ptp(delta))
        u = u_next - u_next.flat[0]      # renormalize to keep values bounded
        if averaging > 0:
            u_sum += u
            delta_sum += float(delta.mean())
            averaging -= 1
            if averaging == 0:
                u = u_sum / plateau_window
                mean_delta = delta_sum / plateau_window
                converged = True
                break
            continue
        if osc <= tol:
            mean_delta = float(delta.mean())
            converged = True
            break
        osc_window.append(osc)
        if len(osc_window) == plateau_window:
            wmin = min(osc_window)
            osc_window = []
            if wmin > 0.99 * osc_window_prev_min:
                # stationary oscillation: switch to window averaging
                averaging = plateau_window
                u_sum = u.copy()
                delta_sum = float(delta.mean())
                averaging -= 1
            osc_window_prev_min = min(osc_window_prev_min, wmin)
    if not converged:
        raise ConvergenceError(
            f"Lax-Oleinik iteration did not flatten after {max_iter} steps "
            f"(oscillation {osc:.3e} > tol {tol:.3e})", oscillation=osc)
    Hbar = -mean_delta / h if direction == NEGATIVE else mean_delta / h
    v = u - u.flat[0]

    # gradient and kink detection
    if grid.n == 1:
        grad = (np.roll(v, -1) - np.roll(v, 1)) / (2 * grid.spacing)
        d2 = np.abs(np.roll(v, -1) - 2 * v + np.roll(v, 1))
        med = float(np.median(d2))
        core = d2 > (kink_factor * med + 1e-9 * max(1.0, float(np.abs(v).max())))
        mask = core.copy()
        for shift in (-2, -1, 1, 2):
            mask |= np.roll(core, shift)
    else:
        g0 = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2 * grid.spacing)
        g1 = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * grid.spacing)
        grad = np.stack([g0, g1], axis=-1)
        d2 = np.abs(np.roll(v, -1, axis=0) - 2 * v + np.roll(v, 1, axis=0)) \
            + np.abs(np.roll(v, -1, axis=1) - 2 * v + np.roll(v, 1, axis=1))
        med = float(np.median(d2))
        core = d2 > (kink_factor * med + 1e-9 * max(1.0, float(np.abs(v).max())))
        mask = core.copy()
        for ax in (0, 1):
            for shift in (-2, -1, 1, 2):
                mask |= np.roll(core, shift, axis=ax)
    return WeakKAMSolution(grid=grid, P=P, kam_type=direction, v=v, Hbar=Hbar,
                           grad=grad, kink_mask=mask, residual=osc, h=h,
                           iterations=it, kink_core=core)


def critical_momentum_1d(Hspec: HamiltonianSpec) -> float:
    """P_c = (2 pi)^-1 contour-integral sqrt(2 (max V - V))."""
    if Hspec.grid.n != 1:
        raise ConfigurationError("1d oracle requires n=1")
    vmax = Hspec.max_potential()
    val, _ = integrate.quad(lambda x: np.sqrt(max(2.0 * (vmax - Hspec.potential_at(x)), 0.0)),
                            0.0, TWO_PI, limit=200)
    return val / TWO_PI


def effective_hamiltonian_oracle_1d(P, Hspec: HamiltonianSpec, tol: float = 1e-10) -> float:
    """Independent 1d value of Hbar(P) from the action-integral equation.

    For |P| above the critical momentum, solves
        (2 pi)^-1 contour-integral sqrt(2 (hbarH - V(x))) dx = |P|
    for hbarH >= max V by bisection with adaptive quadrature; below it,
    returns max V (the flat piece).
    """
    if Hspec.grid.n != 1:
        raise ConfigurationError("1d oracle requires n=1")
    Pabs = abs(float(np.atleast_1d(P)[0]))
    vmax = Hspec.max_potential()
    Pc = critical_momentum_1d(Hspec)
    if Pabs <= Pc + 1e-14:
        return vmax

    def rotation(hval):
        val, _ = integrate.quad(
            lambda x: np.sqrt(max(2.0 * (hval - Hspec.potential_at(x)), 0.0)),
            0.0, TWO_PI, limit=200, epsabs=1e-13, epsrel=1e-13)
        return val / TWO_PI - Pabs

    lo = vmax
    hi = vmax + 0.5 * Pabs ** 2 + 1.0
    while rotation(hi) < 0:
        hi = vmax + 2 * (hi - vmax)
    res = optimize.brentq(rotation, lo, hi, xtol=tol, rtol=1e-14)
    return float(res)


@dataclass(frozen=True)
class MatherData:
    """Probability weights of the projected Mather measure on the x-grid."""

    grid: TorusGrid
    P: np.ndarray
    Hbar: float
    weights: np.ndarray
    support: np.ndarray
    closedness_defect: float
    action_defect: float
    branch: str

    def __post_init__(self):
        for name in ("P", "weights", "support"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


_DEFAULT_F_SUITE = (
    ("sin(x)", lambda x: np.cos(x)),
    ("cos(x)", lambda x: -np.sin(x)),
    ("sin(2x)", lambda x: 2 * np.cos(2 * x)),
    ("cos(2x)", lambda x: -2 * np.sin(2 * x)),
)


def mather_data(P, solution: WeakKAMSolution, Hspec: HamiltonianSpec,
                tol: float = 1e-6, ergodic_time: float = 200.0,
                ergodic_dt: float = 1e-2, n_orbits: int = 32) -> MatherData:
    """Projected Mather measure sigma_P with closedness and action diagnostics.

    n=1: the supercritical branch is the invariant circle density, proportional
    to 1/|P + v'(x)|; the subcritical branch is the point mass at the maximizer
    of V.  Other cases fall back to the long-time empirical measure of the
    Hamiltonian flow started on the graph of P + grad v, binned on the grid.
    """
    grid = solution.grid
    P = np.atleast_1d(np.asarray(P, dtype=float))
    Hbar = solution.Hbar
    vmax = Hspec.max_potential()
    supercritical = Hbar > vmax + 1e-8
    if grid.n == 1:
        if supercritical:
            xi = float(P[0]) + solution.grad
            if np.abs(xi).min() < 1e-12:
                raise ConfigurationError("graph momentum vanishes on a supercritical orbit")
            w = 1.0 / np.abs(xi)
            w /= w.sum()
            branch = "supercritical-1d"
        else:
            w = np.zeros(grid.shape)
            V = Hspec.potential_grid()
            w[np.argmax(V)] = 1.0
            branch = "subcritical-1d"
    else:
        # ergodic-average branch
        rng = np.random.default_rng(0)
        sel = rng.choice(grid.N ** grid.n, size=min(n_orbits, grid.N ** grid.n), replace=False)
        mesh = grid.meshgrid()
        xs = np.column_stack([m.ravel()[sel] for m in mesh])
        etas = P[None, :] + solution.grad.reshape(-1, grid.n)[sel]
        counts = np.zeros(grid.shape)
        nchunk = max(1, int(round(ergodic_time / (50 * ergodic_dt))))
        x_cur, e_cur = xs, etas
        for _ in range(nchunk):
            x_cur, e_cur = flow_points(x_cur, e_cur, Hspec, 50 * ergodic_dt, ergodic_dt)
            idx0 = np.rint(x_cur[:, 0] / grid.spacing).astype(int) % grid.N
            idx1 = np.rint(x_cur[:, 1] / grid.spacing).astype(int) % grid.N
            np.add.at(counts, (idx0, idx1), 1.0)
        if counts.sum() == 0:
            raise ConvergenceError("ergodic average collected no samples")
        w = counts / counts.sum()
        branch = "ergodic"

    # diagnostics (n=1 analytic suites; for n=2 use coordinate harmonics)
    if grid.n == 1:
        x = grid.axis
        xi = float(P[0]) + solution.grad
        closedness = max(abs(float(np.sum(w * df(x) * xi))) for _, df in _DEFAULT_F_SUITE)
        V = Hspec.potential_grid()
        lagr = 0.5 * xi ** 2 - V
        action = float(np.sum(w * (lagr - float(P[0]) * xi)))
    else:
        mesh = grid.meshgrid()
        xi0 = P[0] + solution.grad[..., 0]
        xi1 = P[1] + solution.grad[..., 1]
        closedness = 0.0
        for ax, m in enumerate(mesh):
            df = np.cos(m)
            xi_ax = xi0 if ax == 0 else xi1
            closedness = max(closedness, abs(float(np.sum(w * df * xi_ax))))
        V = Hspec.potential_grid()
        lagr = 0.5 * (xi0 ** 2 + xi1 ** 2) - V
        action = float(np.sum(w * (lagr - P[0] * xi0 - P[1] * xi1)))
    action_defect = abs(action + Hbar)
    if branch != "ergodic" and closedness > tol:
        raise AssertionError(f"closedness defect {closedness:.3e} exceeds tol {tol:.1e}")
    return MatherData(grid=grid, P=P, Hbar=Hbar, weights=w,
                      support=w > 1e-14, closedness_defect=closedness,
                      action_defect=action_defect, branch=branch)


def write_sweep_csv(path, rows) -> None:
    """CSV of (P, Hbar_lax_oleinik, Hbar_oracle, residual) rows."""
    with open(str(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["P", "Hbar_lax_oleinik", "Hbar_oracle", "residual"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def write_solution_csv(path, sol: WeakKAMSolution) -> None:
    """Per-solution dump (x, v, grad, kink) for n=1."""
    if sol.grid.n != 1:
        raise ConfigurationError("per-solution CSV dump implemented for n=1")
    x = sol.grid.axis
    with open(str(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "v", "grad", "kink"])
        for j in range(sol.grid.N):
            writer.writerow([repr(float(x[j])), repr(float(sol.v[j])),
                             repr(float(sol.grad[j])), int(bool(sol.kink_mask[j]))])
