"""Toroidal Weyl quantization: operator matrices, composition, boundedness checks.

The quantization of a symbol b acts on Fourier modes through

    Op(b) e^{i alpha.x} = sum_beta  bhat_{beta-alpha}(hbar (alpha+beta)/2) e^{i beta.x},

where bhat_q(eta) is the x-Fourier coefficient of b(., eta).  This is the
midpoint/reflection formula evaluated spectrally: the kappa-sum collapses to
kappa = alpha + beta, so only symbol samples on the momentum lattice
(hbar/2) Z^n are ever needed.  Samples are taken on the doubled Fourier box
kappa in [-N, N)^n so that the formula is exact for every band-limited input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .torus import (TWO_PI, TestFunction, TorusGrid, WaveFunction,
                    fourier_coefficients, wave_from_coefficients)


def kappa_lattice(grid: TorusGrid) -> np.ndarray:
    """Integer kappa indices of the momentum lattice, FFT order over [-N, N)."""
    return np.fft.fftfreq(2 * grid.N, 1.0 / (2 * grid.N)).astype(int)


@dataclass(frozen=True)
class PhaseSymbol:
    """Symbol b(x, eta) known through a vectorized evaluator.

    ``func`` maps broadcastable coordinate arrays to symbol values:
    ``func(x, eta)`` for n = 1 and ``func(x0, x1, eta0, eta1)`` for n = 2.
    ``fourier`` optionally carries compactly supported phase-space Fourier
    data; when present, :meth:`fourier_consistency` measures the deviation of
    its quadrature evaluation from the direct samples on the lattice.
    """

    grid: TorusGrid
    func: object
    order: int = 0
    fourier: TestFunction | None = None
    label: str = ""

    def sample(self, hbar: float) -> np.ndarray:
        """b on x-grid x momentum lattice; axes (x..., kappa...), FFT order."""
        n, N = self.grid.n, self.grid.N
        ax = self.grid.axis
        kap = kappa_lattice(self.grid)
        eta = hbar * kap / 2.0
        if n == 1:
            out = self.func(ax[:, None], eta[None, :])
        else:
            X0 = ax[:, None, None, None]
            X1 = ax[None, :, None, None]
            E0 = eta[None, None, :, None]
            E1 = eta[None, None, None, :]
            out = self.func(X0, X1, E0, E1)
        return np.broadcast_to(np.asarray(out, dtype=complex),
                               self.grid.shape + (2 * N,) * n).copy()

    def x_coefficients(self, hbar: float) -> np.ndarray:
        """bhat_q(hbar kappa / 2): FFT over the x axes of the sample table."""
        samples = self.sample(hbar)
        n = self.grid.n
        return np.fft.fftn(samples, axes=tuple(range(n))) / self.grid.N ** n

    def fourier_consistency(self, hbar: float) -> float:
        if self.fourier is None:
            raise ConfigurationError("symbol carries no Fourier data")
        n, N = self.grid.n, self.grid.N
        kap = kappa_lattice(self.grid)
        if n == 1:
            etas = (hbar * kap / 2.0)[:, None]
        else:
            E0, E1 = np.meshgrid(hbar * kap / 2.0, hbar * kap / 2.0, indexing="ij")
            etas = np.column_stack([E0.ravel(), E1.ravel()])
        table = self.fourier.eval_grid(self.grid, etas)
        table = table.reshape(self.grid.shape + (2 * N,) * n)
        return float(np.abs(table - self.sample(hbar).real).max())

    @classmethod
    def from_x_function(cls, grid: TorusGrid, vfunc, order: int = 0, label: str = ""):
        """Multiplication symbol b(x, eta) = vfunc(x)."""
        if grid.n == 1:
            f = lambda x, eta: vfunc(x) + 0.0 * eta
        else:
            f = lambda x0, x1, e0, e1: vfunc(x0, x1) + 0.0 * (e0 + e1)
        return cls(grid, f, order=order, label=label)

    @classmethod
    def from_eta_function(cls, grid: TorusGrid, efunc, order: int = 0, label: str = ""):
        if grid.n == 1:
            f = lambda x, eta: efunc(eta) + 0.0 * x
        else:
            f = lambda x0, x1, e0, e1: efunc(e0, e1) + 0.0 * (x0 + x1)
        return cls(grid, f, order=order, label=label)

    @classmethod
    def from_test_function(cls, grid: TorusGrid, tf: TestFunction, label: str = ""):
        """Symbol defined by compactly supported phase-space Fourier data."""
        if grid.n == 1:
            def f(x, eta):
                X, E = np.broadcast_arrays(x, eta)
                return tf.eval(X.reshape(-1, 1), E.reshape(-1, 1)).reshape(X.shape)
        else:
            def f(x0, x1, e0, e1):
                X0, X1, E0, E1 = np.broadcast_arrays(x0, x1, e0, e1)
                xs = np.column_stack([X0.ravel(), X1.ravel()])
                es = np.column_stack([E0.ravel(), E1.ravel()])
                return tf.eval(xs, es).reshape(X0.shape)
        return cls(grid, f, order=0, fourier=tf, label=label or tf.label)

    def product(self, other: "PhaseSymbol") -> "PhaseSymbol":
        if self.grid != other.grid:
            raise GridMismatchError("symbols live on different grids")
        if self.grid.n == 1:
            f = lambda x, eta: self.func(x, eta) * other.func(x, eta)
        else:
            f = lambda x0, x1, e0, e1: (self.func(x0, x1, e0, e1)
                                        * other.func(x0, x1, e0, e1))
        return PhaseSymbol(self.grid, f, order=self.order + other.order,
                           label=f"({self.label})*({other.label})")


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense matrix of Op(b) on span{e^{i alpha.x} : |alpha|_inf <= K}."""

    hbar: float
    K: int
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex).copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def modes(self) -> np.ndarray:
        """Mode multi-indices in row/column order, shape (dim, n)."""
        axis = np.arange(-self.K, self.K + 1)
        if self.n == 1:
            return axis[:, None]
        A, B = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([A.ravel(), B.ravel()])

    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def apply_to_coefficients(self, coeff_box: np.ndarray) -> np.ndarray:
        return self.matrix @ coeff_box


def _mode_list(K: int, n: int) -> np.ndarray:
    axis = np.arange(-K, K + 1)
    if n == 1:
        return axis[:, None]
    A, B = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([A.ravel(), B.ravel()])


def weyl_matrix(b: PhaseSymbol, K: int, hbar: float) -> OperatorMatrix:
    """Matrix entries M_{beta,alpha} = <e^{i beta.x}, Op(b) e^{i alpha.x}> / (2pi)^n."""
    grid = b.grid
    if K > grid.N // 4:
        raise ConfigurationError(f"truncation K={K} exceeds N/4={grid.N // 4}")
    coeff = b.x_coefficients(hbar)       # (N..., 2N...) indexed [q..., kappa...]
    modes = _mode_list(K, grid.n)
    dim = modes.shape[0]
    M = np.empty((dim, dim), dtype=complex)
    N, M2 = grid.N, 2 * grid.N
    if grid.n == 1:
        al = modes[:, 0]
        Q = (al[:, None] - al[None, :]) % N          # q = beta - alpha
        Kap = (al[:, None] + al[None, :]) % M2       # kappa = alpha + beta
        M[:] = coeff[Q, Kap]
    else:
        a0, a1 = modes[:, 0], modes[:, 1]
        Q0 = (a0[:, None] - a0[None, :]) % N
        Q1 = (a1[:, None] - a1[None, :]) % N
        K0 = (a0[:, None] + a0[None, :]) % M2
        K1 = (a1[:, None] + a1[None, :]) % M2
        M[:] = coeff[Q0, Q1, K0, K1]
    return OperatorMatrix(hbar=hbar, K=K, n=grid.n, matrix=M)


def apply_weyl(b: PhaseSymbol, psi: WaveFunction) -> WaveFunction:
    """Op(b) psi, evaluated spectrally; exact for band-limited psi."""
    grid = b.grid
    if grid != psi.grid:
        raise GridMismatchError("symbol and wave function live on different grids")
    n, N = grid.n, grid.N
    coeff = b.x_coefficients(psi.hbar)
    psi_hat = fourier_coefficients(psi).values
    modes = grid.modes
    out = np.zeros_like(psi_hat)
    if n == 1:
        alpha = modes
        for qi, q in enumerate(modes):
            rows = coeff[qi]
            if np.abs(rows).max() < 1e-300:
                continue
            beta = alpha + q
            inside = (beta >= -N // 2) & (beta < N // 2)
            kap = (2 * alpha + q) % (2 * N)
            contrib = psi_hat[alpha % N] * rows[kap]
            out[beta[inside] % N] += contrib[inside]
    else:
        A0, A1 = np.meshgrid(modes, modes, indexing="ij")
        for q0 in modes:
            for q1 in modes:
                rows = coeff[q0 % N, q1 % N]
                if np.abs(rows).max() < 1e-300:
                    continue
                B0, B1 = A0 + q0, A1 + q1
                inside = ((B0 >= -N // 2) & (B0 < N // 2)
                          & (B1 >= -N // 2) & (B1 < N // 2))
                contrib = psi_hat * rows[(2 * A0 + q0) % (2 * N), (2 * A1 + q1) % (2 * N)]
                np.add.at(out, (B0[inside] % N, B1[inside] % N), contrib[inside])
    return wave_from_coefficients(grid, out, psi.hbar, psi.ell)


def _x_bandwidth(coeff: np.ndarray, n: int, rel_tol: float = 1e-12) -> int:
    """Largest |q|_inf with non-negligible x-Fourier content."""
    mags = np.abs(coeff)
    cutoff = rel_tol * max(mags.max(), 1e-300)
    N = coeff.shape[0]
    qs = np.fft.fftfreq(N, 1.0 / N).astype(int)
    band = 0
    if n == 1:
        for qi, q in enumerate(qs):
            if mags[qi].max() > cutoff:
                band = max(band, abs(int(q)))
    else:
        for qi, q0 in enumerate(qs):
            for qj, q1 in enumerate(qs):
                if mags[qi, qj].max() > cutoff:
                    band = max(band, abs(int(q0)), abs(int(q1)))
    return band


def compose(a: PhaseSymbol, b: PhaseSymbol, K: int, hbar: float):
    """Product matrix Op(a) Op(b) and the Moyal remainder norm.

    The remainder ||Op(a)Op(b) - Op(a.b)|| is measured after restricting both
    operators to the inner mode box shrunk by the symbols' x-bandwidths:
    finite-section edge effects (intermediate modes escaping the truncation)
    would otherwise contaminate the O(hbar) scaling.
    """
    if a.grid != b.grid:
        raise GridMismatchError("symbols live on different grids")
    Ma = weyl_matrix(a, K, hbar)
    Mb = weyl_matrix(b, K, hbar)
    product = Ma.matrix @ Mb.matrix
    Mab = weyl_matrix(a.product(b), K, hbar)
    margin = (_x_bandwidth(a.x_coefficients(hbar), a.grid.n)
              + _x_bandwidth(b.x_coefficients(hbar), b.grid.n))
    if margin >= K:
        raise ConfigurationError(
            f"truncation K={K} too small for symbol bandwidths (margin {margin})")
    modes = _mode_list(K, a.grid.n)
    keep = np.abs(modes).max(axis=1) <= K - margin
    diff = (product - Mab.matrix)[np.ix_(keep, keep)]
    remainder = float(np.linalg.norm(diff, 2))
    return OperatorMatrix(hbar=hbar, K=K, n=a.grid.n, matrix=product), remainder


def cv_bound_constant(n: int) -> float:
    """2^{n+1}/(n+2) * pi^{(3n-1)/2} / Gamma((n+1)/2)."""
    return 2.0 ** (n + 1) / (n + 2) * math.pi ** ((3 * n - 1) / 2) / math.gamma((n + 1) / 2)


def _derivative_order_bound(n: int) -> int:
    N = n // 2 + 1 if n % 2 == 0 else (n + 1) // 2 + 1
    return 2 * N


def cv_bound_check(b: PhaseSymbol, K: int, hbar: float):
    """Spectral norm of Op(b) against the L2-boundedness constant.

    Returns (norm, bound); raises when the inequality fails.  The x-derivative
    sup-norms are estimated spectrally on the sampled lattice, so the check
    applies to symbols bounded with bounded x-derivatives there.
    """
    grid = b.grid
    samples = b.sample(hbar)
    if not np.isfinite(samples).all():
        raise ConfigurationError("symbol samples are not finite")
    coeff = np.fft.fftn(samples, axes=tuple(range(grid.n))) / grid.N ** grid.n
    qs = grid.modes
    total = 0.0
    max_order = _derivative_order_bound(grid.n)
    if grid.n == 1:
        for order in range(max_order + 1):
            dcoeff = coeff * (1j * qs[:, None]) ** order
            deriv = np.fft.ifftn(dcoeff, axes=(0,)) * grid.N
            total += float(np.abs(deriv).max())
    else:
        for o0 in range(max_order + 1):
            for o1 in range(max_order + 1 - o0):
                dcoeff = coeff * (1j * qs[:, None, None, None]) ** o0 \
                               * (1j * qs[None, :, None, None]) ** o1
                deriv = np.fft.ifftn(dcoeff, axes=(0, 1)) * grid.N ** 2
                total += float(np.abs(deriv).max())
    bound = cv_bound_constant(grid.n) * total
    norm = weyl_matrix(b, K, hbar).spectral_norm()
    if norm > bound * (1 + 1e-12):
        raise AssertionError(f"operator norm {norm} exceeds bound {bound}")
    return norm, bound
