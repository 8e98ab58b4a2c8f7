"""Wigner transforms on the momentum lattice (hbar/2) Z^n and their dynamics.

W psi (x, hbar kappa / 2) = (2pi)^-n int e^{i kappa.z} psi(x - z) conj(psi)(x + z) dz.

The integrand is band-limited with z-modes up to |kappa| = N per axis, so the
table is computed exactly by trigonometric upsampling of psi to the 2N grid
followed by a length-2N FFT in z.  Momentum indices kappa therefore run over
the doubled centered box [-N, N)^n (period 2N); this is what makes both
marginal identities hold to rounding:

  (i)  sum_kappa W(x, .) = |psi(x)|^2,
  (ii) (2pi)^-n int W(x, hbar kappa / 2) dx = |psihat_{kappa/2}|^2 for even
       kappa and 0 for odd kappa.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .torus import (TWO_PI, TestFunction, TorusGrid, WaveFunction,
                    fourier_coefficients, upsample)


@dataclass(frozen=True)
class WignerTable:
    """Real Wigner values indexed by (x grid point, lattice index kappa).

    ``values`` axes: n position axes of length N then n momentum axes of
    length 2N, both in FFT storage order.
    """

    grid: TorusGrid
    hbar: float
    values: np.ndarray
    realness_defect: float = 0.0
    marginal_defects: tuple = field(default=(0.0, 0.0))

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def kappas(self) -> np.ndarray:
        """Integer kappa indices along one momentum axis, FFT order."""
        return np.fft.fftfreq(2 * self.grid.N, 1.0 / (2 * self.grid.N)).astype(int)

    @property
    def etas(self) -> np.ndarray:
        """Momentum lattice points hbar kappa / 2 along one axis, FFT order."""
        return self.hbar * self.kappas / 2.0

    @property
    def eta_max(self) -> float:
        return self.hbar * self.grid.N / 2.0

    def eta_points(self) -> np.ndarray:
        """All lattice momentum points as an (L, n) array in table order."""
        e = self.etas
        if self.grid.n == 1:
            return e[:, None]
        E0, E1 = np.meshgrid(e, e, indexing="ij")
        return np.column_stack([E0.ravel(), E1.ravel()])

    def position_marginal(self) -> np.ndarray:
        """sum_eta W(x, eta); equals |psi(x)|^2."""
        axes = tuple(range(self.grid.n, 2 * self.grid.n))
        return self.values.sum(axis=axes)

    def momentum_marginal(self) -> np.ndarray:
        """(2pi)^-n int W(x, .) dx per lattice point."""
        axes = tuple(range(self.grid.n))
        return (self.values.sum(axis=axes) * self.grid.cell_volume / TWO_PI ** self.grid.n)

    def total_mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


def wigner_transform(psi: WaveFunction, check_tol: float = 1e-10) -> WignerTable:
    """Exact lattice Wigner transform of a band-limited wave function."""
    grid = psi.grid
    n, N = grid.n, grid.N
    up = upsample(psi, 2)
    M = 2 * N
    if n == 1:
        j2 = (2 * np.arange(N))[:, None]
        m = np.arange(M)[None, :]
        F = up[(j2 - m) % M] * np.conj(up[(j2 + m) % M])
        W = np.fft.ifft(F, axis=1)
    else:
        m0 = np.arange(M)[:, None]
        m1 = np.arange(M)[None, :]
        W = np.empty((N, N, M, M), dtype=complex)
        for j0 in range(N):
            a0m = (2 * j0 - m0) % M
            a0p = (2 * j0 + m0) % M
            for j1 in range(N):
                F = up[a0m, (2 * j1 - m1) % M] * np.conj(up[a0p, (2 * j1 + m1) % M])
                W[j0, j1] = np.fft.ifftn(F)
    realness = float(np.abs(W.imag).max())
    if realness > check_tol:
        raise AssertionError(f"Wigner table not real: max imaginary part {realness}")
    table = W.real

    # marginal (i)
    pos = table.sum(axis=tuple(range(n, 2 * n)))
    d1 = float(np.abs(pos - np.abs(psi.values) ** 2).max())
    # marginal (ii): nonzero only at kappa = 2 alpha
    mom = table.sum(axis=tuple(range(n))) * grid.cell_volume / TWO_PI ** n
    chat = np.abs(fourier_coefficients(psi).values) ** 2
    expected = np.zeros((M,) * n)
    sel = 2 * np.fft.fftfreq(N, 1.0 / N).astype(int) % M
    if n == 1:
        expected[sel] = chat
    else:
        expected[np.ix_(sel, sel)] = chat
    d2 = float(np.abs(mom - expected).max())
    if d1 > check_tol or d2 > check_tol:
        raise AssertionError(f"Wigner marginal defect too large: (i)={d1}, (ii)={d2}")
    return WignerTable(grid=grid, hbar=psi.hbar, values=table,
                       realness_defect=realness, marginal_defects=(d1, d2))


def pair(W: WignerTable, phi, warn_tol: float = 1e-3) -> float:
    """sum_eta int phi(x, eta) W(x, eta) dx.

    ``phi`` may be a :class:`TestFunction` or any callable phi(x, eta) acting
    on (K, n)-shaped point arrays.  A truncation warning is emitted when phi
    is non-negligible on the outermost momentum shell of the table.

    For phi in the test class the pairing obeys the Fourier-side bound
    |pair| <= (2pi)^-n ||phihat||_{l1 L1} ||psi||^2 (each U_hbar(q, p) is
    unitary), which is the workable form of the sup-norm estimate.
    """
    grid = W.grid
    etas = W.eta_points()
    if isinstance(phi, TestFunction):
        table = phi.eval_grid(grid, etas).reshape(W.values.shape)
    else:
        mesh = grid.meshgrid()
        xs = np.column_stack([m.ravel() for m in mesh]) if grid.n == 2 \
            else mesh[0].ravel()[:, None]
        L = etas.shape[0]
        vals = np.empty((xs.shape[0], L))
        for i, xp in enumerate(xs):
            vals[i] = np.asarray(phi(np.broadcast_to(xp, (L, grid.n)), etas), dtype=float)
        table = vals.reshape(W.values.shape)
    edge = np.abs(W.kappas) >= int(0.9 * grid.N)
    edge_mag = float(np.abs(np.compress(edge, table, axis=grid.n)).max())
    overall = float(np.abs(table).max())
    shell_mass = float(np.abs(np.compress(edge, W.values, axis=grid.n)).sum()
                       * grid.cell_volume)
    if overall > 0 and edge_mag > warn_tol * overall \
            and (edge_mag / overall) * shell_mass > 1e-6:
        warnings.warn(
            f"test function magnitude {edge_mag:.3e} near the lattice cutoff "
            f"eta_max={W.eta_max:.3g} where the table carries mass {shell_mass:.3e}; "
            f"pairing may be truncated", stacklevel=2)
    return float((table * W.values).sum() * grid.cell_volume)


def tightness_mass(psi: WaveFunction, R: float) -> float:
    """Phase-space mass outside |eta| > R:  sum_{|hbar alpha| > R} |psihat_alpha|^2."""
    if R <= 0:
        raise ConfigurationError(f"radius must be positive, got {R}")
    coeff = fourier_coefficients(psi).values
    modes = psi.grid.modes
    if psi.grid.n == 1:
        eta_norm = np.abs(psi.hbar * modes)
    else:
        A0, A1 = np.meshgrid(modes, modes, indexing="ij")
        eta_norm = psi.hbar * np.hypot(A0, A1)
    return float(np.sum(np.abs(coeff[eta_norm > R]) ** 2))


@dataclass(frozen=True)
class KappaKernel:
    """Lattice rows of the potential kernel.

    K(x, hbar kappa / 2) = (i / hbar) (c_{-kappa} e^{-i kappa.x} - c_kappa e^{i kappa.x})
    with c the Fourier coefficients of V (V = sum_omega c_omega e^{i omega.x});
    nonzero only on the finitely many kappa carried by V.  Normalized so that
    the lattice convolution with a Wigner table reproduces the potential term
    of the transformed Schroedinger equation exactly (verified in tests
    against direct quadrature of that term).
    """

    grid: TorusGrid
    hbar: float
    rows: dict   # omega (int or (int, int)) -> real ndarray on the x grid

    def convolve(self, W: WignerTable) -> np.ndarray:
        """(K *_eta W)(x, eta) = sum_omega K(x, hbar omega/2) W(x, eta - hbar omega/2)."""
        out = np.zeros_like(W.values)
        n = self.grid.n
        for omega, row in self.rows.items():
            if n == 1:
                shifted = np.roll(W.values, omega, axis=1)
                out += row[:, None] * shifted
            else:
                shifted = np.roll(W.values, omega, axis=(2, 3))
                out += row[:, :, None, None] * shifted
        return out


def kappa_kernel(V: np.ndarray, grid: TorusGrid, hbar: float, tol: float = 1e-13) -> KappaKernel:
    """Kernel rows from the Fourier coefficients of the (real, smooth) potential."""
    V = np.asarray(V, dtype=float)
    if V.shape != grid.shape:
        raise ConfigurationError("potential samples must live on the grid")
    c = np.fft.fftn(V) / grid.N ** grid.n
    modes = grid.modes
    rows = {}
    scale = max(np.abs(c).max(), 1e-300)
    if grid.n == 1:
        x = grid.axis
        for oi, omega in enumerate(modes):
            if omega == 0 or np.abs(c[oi]) <= tol * scale:
                continue
            row = (1j / hbar) * (np.conj(c[oi]) * np.exp(-1j * omega * x)
                                 - c[oi] * np.exp(1j * omega * x))
            rows[int(omega)] = row.real
    else:
        X0, X1 = grid.meshgrid()
        for oi, o0 in enumerate(modes):
            for oj, o1 in enumerate(modes):
                if (o0 == 0 and o1 == 0) or np.abs(c[oi, oj]) <= tol * scale:
                    continue
                phase = np.exp(1j * (o0 * X0 + o1 * X1))
                row = (1j / hbar) * (np.conj(c[oi, oj]) * np.conj(phase) - c[oi, oj] * phase)
                rows[(int(o0), int(o1))] = row.real
    return KappaKernel(grid=grid, hbar=hbar, rows=rows)


@dataclass(frozen=True)
class TimeWindowedTest:
    """f(s, x, eta) = window(s) phi(x, eta), with window(0) = window(t_final) = 0.

    The weak evolution identity integrates against test functions that vanish
    at both time endpoints; the window supplies that.
    """

    phi: TestFunction
    window: object
    dwindow: object


def evolution_residual(trajectory, f: TimeWindowedTest, V: np.ndarray, hbar: float,
                       rtol_dt: float = 1e-9) -> float:
    """Discretized weak-form residual of the lattice Wigner evolution equation.

    |int_0^t sum_eta int [(ds f + eta . dx f) W + f (K *_eta W)] dx ds|

    ``trajectory`` iterates over (t_k, WignerTable) at uniform spacing (a
    generator is fine; tables are consumed streamingly).  Expected to vanish
    as (dt, 1/N) -> 0; the time quadrature is trapezoid, matching the O(dt^2)
    splitting error of the propagator.
    """
    it = iter(trajectory)
    try:
        t0, W0 = next(it)
    except StopIteration:
        raise ConfigurationError("empty trajectory") from None
    grid = W0.grid
    kernel = kappa_kernel(V, grid, hbar)
    etas = W0.eta_points()
    n = grid.n
    shape = W0.values.shape
    PHI = f.phi.eval_grid(grid, etas).reshape(shape)
    ETA_DPHI = np.zeros(shape)
    for ax in range(n):
        dtab = f.phi.eval_grid(grid, etas, derivative=ax).reshape(shape)
        eta_ax = etas[:, ax].reshape((1,) * n + (2 * grid.N,) * n)
        ETA_DPHI += eta_ax * dtab

    def integrand(s, W):
        w, dw = f.window(s), f.dwindow(s)
        term = (dw * PHI + w * ETA_DPHI) * W.values + w * PHI * kernel.convolve(W)
        return float(term.sum() * grid.cell_volume)

    total = 0.0
    prev_t, prev_val = t0, integrand(t0, W0)
    dt_ref = None
    for t, W in it:
        dt = t - prev_t
        if dt_ref is None:
            dt_ref = dt
        elif abs(dt - dt_ref) > rtol_dt * max(abs(dt_ref), 1e-300):
            raise ConfigurationError(
                f"nonuniform time sampling: step {dt} != {dt_ref}")
        val = integrand(t, W)
        total += 0.5 * dt * (prev_val + val)
        prev_t, prev_val = t, val
    return abs(total)


def write_wigner_csv(W: WignerTable, path) -> None:
    """CSV columns (x indices..., kappa indices..., value) + JSON header sidecar."""
    path = str(path)
    n, N = W.grid.n, W.grid.N
    kap = W.kappas
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if n == 1:
            writer.writerow(["x_index", "kappa", "value"])
            for j in range(N):
                for ki in range(2 * N):
                    writer.writerow([j, int(kap[ki]), repr(float(W.values[j, ki]))])
        else:
            writer.writerow(["x_index_0", "x_index_1", "kappa_0", "kappa_1", "value"])
            for j0 in range(N):
                for j1 in range(N):
                    for k0 in range(2 * N):
                        for k1 in range(2 * N):
                            writer.writerow([j0, j1, int(kap[k0]), int(kap[k1]),
                                             repr(float(W.values[j0, j1, k0, k1]))])
    header = {"n": n, "N": N, "hbar": W.hbar, "eta_max": W.eta_max}
    with open(path.rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
