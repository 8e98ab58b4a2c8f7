"""Quantum propagator and classical Hamiltonian flow for H = |eta|^2/2 + V(x).

The quantum side is Strang splitting: the kinetic factor is diagonal in
Fourier space (mode alpha picks up e^{-i hbar |alpha|^2 dt / 2}) and hence
exact per step; the potential factor is a pointwise phase.  The classical
side is velocity Verlet with the force evaluated from the trigonometric
expansion of V, exact at off-grid positions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, GridMismatchError
from .quantize import PhaseSymbol, weyl_matrix
from .torus import TWO_PI, TorusGrid, WaveFunction, fourier_coefficients, wave_from_coefficients


@dataclass(frozen=True)
class HamiltonianSpec:
    """Mechanical Hamiltonian data: cosine-series potential on a torus grid.

    V(x) = sum_m coefs[m] cos(freqs[m] . x); ``ell`` is the momentum lattice
    scale for admissible P (P in ell Z^n).
    """

    grid: TorusGrid
    freqs: np.ndarray       # (M,) ints for n=1, (M, n) for n=2
    coefs: np.ndarray       # (M,) real
    ell: float = 1.0

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=int)
        coefs = np.asarray(self.coefs, dtype=float)
        if self.grid.n == 1:
            freqs = freqs.reshape(-1)
        else:
            freqs = freqs.reshape(-1, 2)
        if len(coefs) != len(freqs):
            raise ConfigurationError("one coefficient per cosine frequency required")
        freqs = freqs.copy(); freqs.setflags(write=False)
        coefs = coefs.copy(); coefs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coefs", coefs)

    def potential_at(self, *coords) -> np.ndarray:
        """V at arbitrary points (exact trigonometric evaluation)."""
        if self.grid.n == 1:
            x = np.asarray(coords[0], dtype=float)
            out = np.zeros_like(x)
            for k, c in zip(self.freqs, self.coefs):
                out += c * np.cos(k * x)
            return out
        x0, x1 = (np.asarray(c, dtype=float) for c in coords)
        out = np.zeros_like(x0)
        for k, c in zip(self.freqs, self.coefs):
            out += c * np.cos(k[0] * x0 + k[1] * x1)
        return out

    def potential_grid(self) -> np.ndarray:
        return self.potential_at(*self.grid.meshgrid()) if self.grid.n == 2 \
            else self.potential_at(self.grid.axis)

    def potential_half_grid(self) -> np.ndarray:
        """V on the doubled grid (midpoints of grid segments included)."""
        M = 2 * self.grid.N
        ax = TWO_PI * np.arange(M) / M
        if self.grid.n == 1:
            return self.potential_at(ax)
        X0, X1 = np.meshgrid(ax, ax, indexing="ij")
        return self.potential_at(X0, X1)

    def force_at(self, *coords):
        """-grad V, exact at off-grid points."""
        if self.grid.n == 1:
            x = np.asarray(coords[0], dtype=float)
            out = np.zeros_like(x)
            for k, c in zip(self.freqs, self.coefs):
                out += c * k * np.sin(k * x)
            return out
        x0, x1 = (np.asarray(c, dtype=float) for c in coords)
        s0 = np.zeros_like(x0)
        s1 = np.zeros_like(x0)
        for k, c in zip(self.freqs, self.coefs):
            s = c * np.sin(k[0] * x0 + k[1] * x1)
            s0 += s * k[0]
            s1 += s * k[1]
        return s0, s1

    def energy(self, x, eta):
        """H(x, eta) = |eta|^2 / 2 + V(x) for (..., n)-shaped points."""
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.grid.n == 1:
            return 0.5 * eta ** 2 + self.potential_at(x)
        return 0.5 * (eta ** 2).sum(axis=-1) + self.potential_at(x[..., 0], x[..., 1])

    def max_potential(self) -> float:
        # trig polynomial: refine the best half-grid point by dense sampling
        M = max(4096, 8 * self.grid.N)
        ax = TWO_PI * np.arange(M) / M
        if self.grid.n == 1:
            return float(self.potential_at(ax).max())
        X0, X1 = np.meshgrid(ax[::8], ax[::8], indexing="ij")
        return float(self.potential_at(X0, X1).max())

    def min_potential(self) -> float:
        M = max(4096, 8 * self.grid.N)
        ax = TWO_PI * np.arange(M) / M
        if self.grid.n == 1:
            return float(self.potential_at(ax).min())
        X0, X1 = np.meshgrid(ax[::8], ax[::8], indexing="ij")
        return float(self.potential_at(X0, X1).min())

    def symbol(self) -> PhaseSymbol:
        """H as a phase symbol, for operator-matrix construction."""
        if self.grid.n == 1:
            f = lambda x, eta: 0.5 * eta ** 2 + self.potential_at(x)
        else:
            f = lambda x0, x1, e0, e1: 0.5 * (e0 ** 2 + e1 ** 2) + self.potential_at(x0, x1)
        return PhaseSymbol(self.grid, f, order=2, label="H")


def hamiltonian_from_terms(grid: TorusGrid, terms, ell: float = 1.0) -> HamiltonianSpec:
    """terms: iterable of (frequency, coefficient); frequency int (n=1) or pair."""
    freqs, coefs = [], []
    for k, c in terms:
        freqs.append(k)
        coefs.append(c)
    if not freqs:
        freqs = [0] if grid.n == 1 else [(0, 0)]
        coefs = [0.0]
    return HamiltonianSpec(grid=grid, freqs=np.asarray(freqs), coefs=np.asarray(coefs), ell=ell)


@dataclass(frozen=True)
class FlowState:
    """Single classical state (x, eta) with cached energy."""

    x: np.ndarray
    eta: np.ndarray
    energy: float

    @classmethod
    def make(cls, Hspec: HamiltonianSpec, x, eta) -> "FlowState":
        x = np.atleast_1d(np.asarray(x, dtype=float)) % TWO_PI
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        return cls(x=x, eta=eta, energy=float(Hspec.energy(x if Hspec.grid.n == 2 else x[0],
                                                           eta if Hspec.grid.n == 2 else eta[0])))


def _split_steps(t: float, dt: float):
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    ratio = abs(t) / dt
    nsteps = round(ratio)
    if nsteps == 0 and t != 0:
        raise ConfigurationError(f"dt={dt} larger than |t|={abs(t)}")
    if abs(ratio - nsteps) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(f"dt={dt} does not divide t={t}")
    return nsteps, (dt if t >= 0 else -dt)


def propagate_schrodinger(psi: WaveFunction, Hspec: HamiltonianSpec, t: float,
                          dt: float) -> WaveFunction:
    """Strang split-step solution at time t (signed; the group is unitary)."""
    if Hspec.grid != psi.grid:
        raise GridMismatchError("Hamiltonian and state live on different grids")
    nsteps, dts = _split_steps(t, dt)
    for _, phi in propagate_stream(psi, Hspec, nsteps, dts):
        pass
    return phi


def propagate_stream(psi: WaveFunction, Hspec: HamiltonianSpec, nsteps: int, dts: float,
                     every: int = None):
    """Yield (s_k, psi(s_k)) along the split-step trajectory, including s=0.

    ``every`` thins the snapshots; the final state is always yielded.
    """
    grid = psi.grid
    V = Hspec.potential_grid()
    hbar = psi.hbar
    modes = grid.modes
    if grid.n == 1:
        ksq = modes.astype(float) ** 2
    else:
        M0, M1 = np.meshgrid(modes, modes, indexing="ij")
        ksq = (M0.astype(float) ** 2 + M1.astype(float) ** 2)
    half_v = np.exp(-1j * V * dts / (2 * hbar))
    kin = np.exp(-1j * hbar * ksq * dts / 2)
    every = every or 1
    yield 0.0, psi
    vals = psi.values
    for k in range(1, nsteps + 1):
        vals = half_v * vals
        vals = np.fft.ifftn(np.fft.fftn(vals) * kin)
        vals = half_v * vals
        if k % every == 0 or k == nsteps:
            yield k * dts, WaveFunction(grid, vals, hbar, psi.ell)


def exact_propagate(psi: WaveFunction, Hspec: HamiltonianSpec, t: float, K: int,
                    band_tol: float = 1e-12) -> WaveFunction:
    """Cross-validation oracle: diagonalize Op(H) on the mode box |alpha|_inf <= K.

    Requires psi band-limited inside the box (checked); applies e^{-i E t / hbar}
    in the eigenbasis.
    """
    if K > 64:
        raise ConfigurationError(f"truncation K={K} too large for dense diagonalization")
    grid = psi.grid
    M = weyl_matrix(Hspec.symbol(), K, psi.hbar)
    coeff = fourier_coefficients(psi).values
    modes = M.modes
    N = grid.N
    if grid.n == 1:
        idx = modes[:, 0] % N
        vec = coeff[idx]
    else:
        vec = coeff[modes[:, 0] % N, modes[:, 1] % N]
    inside_mass = float(np.sum(np.abs(vec) ** 2))
    total_mass = float(np.sum(np.abs(coeff) ** 2))
    if total_mass - inside_mass > band_tol * max(total_mass, 1e-300):
        raise ConfigurationError(
            f"state has Fourier mass {total_mass - inside_mass:.3e} outside |alpha|<= {K}")
    energies, U = np.linalg.eigh(M.matrix)
    evolved = U @ (np.exp(-1j * energies * t / psi.hbar) * (U.conj().T @ vec))
    out = np.zeros_like(coeff)
    if grid.n == 1:
        out[idx] = evolved
    else:
        out[modes[:, 0] % N, modes[:, 1] % N] = evolved
    return wave_from_coefficients(grid, out, psi.hbar, psi.ell)


def flow_points(xs, etas, Hspec: HamiltonianSpec, t: float, dt: float):
    """Velocity-Verlet flow of particle arrays; signed t (backward uses -dt)."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    if t == 0:
        return xs % TWO_PI, etas.copy()
    nsteps = max(1, round(abs(t) / dt))
    dts = t / nsteps
    if Hspec.grid.n == 1:
        return kernels.verlet_flow_1d(xs, etas, np.array(Hspec.freqs, dtype=np.int64),
                                      np.array(Hspec.coefs, dtype=float), dts, nsteps)
    return kernels.verlet_flow_2d(xs.reshape(-1, 2), etas.reshape(-1, 2),
                                  np.array(Hspec.freqs, dtype=float),
                                  np.array(Hspec.coefs, dtype=float), dts, nsteps)


def hamiltonian_flow(s: FlowState, Hspec: HamiltonianSpec, t: float, dt: float) -> FlowState:
    """Flow a single state for (signed) time t."""
    if Hspec.grid.n == 1:
        x, eta = flow_points(s.x, s.eta, Hspec, t, dt)
        return FlowState.make(Hspec, x[0], eta[0])
    x, eta = flow_points(s.x.reshape(1, 2), s.eta.reshape(1, 2), Hspec, t, dt)
    return FlowState.make(Hspec, x[0], eta[0])


def write_trajectory_csv(path, times, xs, etas, energies, n: int = 1) -> None:
    """CSV dump with columns (t, x..., eta..., energy)."""
    with open(str(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        if n == 1:
            writer.writerow(["t", "x", "eta", "energy"])
            for t, x, e, en in zip(times, xs, etas, energies):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(e)),
                                 repr(float(en))])
        else:
            writer.writerow(["t", "x_0", "x_1", "eta_0", "eta_1", "energy"])
            for t, x, e, en in zip(times, xs, etas, energies):
                writer.writerow([repr(float(t)), repr(float(x[0])), repr(float(x[1])),
                                 repr(float(e[0])), repr(float(e[1])), repr(float(en))])
