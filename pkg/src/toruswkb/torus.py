"""Torus grids, discrete Fourier analysis, wave functions and phase-space test functions.

Conventions used throughout the package (n = 1 or 2):

* positions live on the flat torus (R/2piZ)^n, sampled at x_j = 2pi j / N;
* Fourier series psi(x) = sum_alpha psihat_alpha e^{i alpha.x} with
  psihat_alpha = (2pi)^-n int e^{-i alpha.x} psi(x) dx, alpha in the centered
  box [-N/2, N/2)^n (N even, so the box is genuinely centered);
* integrals over the torus are the trapezoid rule (2pi/N)^n sum_j, which is
  exact for band-limited integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GridMismatchError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with N points per axis on the n-torus."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.n}")
        if self.N < 8 or self.N % 2 != 0:
            raise ConfigurationError(f"points per axis must be even and >= 8, got {self.N}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.N

    @property
    def axis(self) -> np.ndarray:
        """Grid coordinates along one axis, in [0, 2pi)."""
        return TWO_PI * np.arange(self.N) / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    def meshgrid(self):
        """Tuple of n coordinate arrays of shape (N,)*n."""
        return np.meshgrid(*([self.axis] * self.n), indexing="ij")

    @property
    def modes(self) -> np.ndarray:
        """Integer Fourier modes along one axis, FFT storage order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    def integrate(self, values: np.ndarray):
        """Trapezoid/spectral quadrature of a grid function."""
        return values.sum() * self.cell_volume


def make_grid(n: int, N: int) -> TorusGrid:
    """Build the uniform torus grid; rejects odd N and n outside {1, 2}."""
    return TorusGrid(n=n, N=N)


@dataclass(frozen=True)
class WaveFunction:
    """Complex grid values plus the semiclassical parameter hbar.

    ``ell`` is the momentum lattice scale; when given, 1/hbar must be a
    positive integer multiple of 1/ell (phases e^{iPx/hbar} with P in ell.Z^n
    are then single-valued on the torus) and ``admissible`` records that.
    """

    grid: TorusGrid
    values: np.ndarray
    hbar: float
    ell: float | None = None
    admissible: bool = field(default=False)

    def __post_init__(self):
        if self.hbar <= 0:
            raise ConfigurationError(f"hbar must be positive, got {self.hbar}")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.ell is not None:
            object.__setattr__(self, "admissible", hbar_is_admissible(self.hbar, self.ell))

    def norm(self) -> float:
        """L2 norm by the trapezoid/spectral rule."""
        return float(np.sqrt(self.grid.integrate(np.abs(self.values) ** 2)))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / self.norm(), self.hbar, self.ell)


def hbar_is_admissible(hbar: float, ell: float, rtol: float = 1e-9) -> bool:
    """True when 1/hbar belongs to (1/ell).N, i.e. ell/hbar is a positive integer."""
    m = ell / hbar
    return m >= 1 - rtol and abs(m - round(m)) <= rtol * max(1.0, m)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Fourier coefficients psihat_alpha, stored in FFT order."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def at(self, *alpha: int) -> complex:
        """Coefficient for the mode alpha (any integer representatives mod N)."""
        idx = tuple(a % self.grid.N for a in alpha)
        return complex(self.values[idx])

    def parseval_norm_sq(self) -> float:
        """(2pi)^n sum |psihat_alpha|^2, equal to the L2 norm squared."""
        return float(TWO_PI ** self.grid.n * np.sum(np.abs(self.values) ** 2))


def fourier_coefficients(psi: WaveFunction) -> SpectralCoefficients:
    """psihat_alpha = (2pi)^-n int e^{-i alpha.x} psi dx, computed spectrally."""
    coeff = np.fft.fftn(psi.values) / psi.grid.N ** psi.grid.n
    return SpectralCoefficients(psi.grid, coeff)


def wave_from_coefficients(grid: TorusGrid, coeff: np.ndarray, hbar: float,
                           ell: float | None = None) -> WaveFunction:
    """Inverse of :func:`fourier_coefficients`."""
    values = np.fft.ifftn(np.asarray(coeff, dtype=complex)) * grid.N ** grid.n
    return WaveFunction(grid, values, hbar, ell)


def upsample(psi: WaveFunction, factor: int = 2) -> np.ndarray:
    """Trigonometric interpolation of psi onto the factor-times-finer grid.

    Exact for band-limited functions; used by the Wigner transform, which
    needs psi at half-grid points.
    """
    N, n, M = psi.grid.N, psi.grid.n, factor * psi.grid.N
    coeff = np.fft.fftn(psi.values) / N ** n
    fine = np.zeros((M,) * n, dtype=complex)
    sel = np.fft.fftfreq(N, 1.0 / N).astype(int)
    if n == 1:
        fine[sel % M] = coeff
    else:
        fine[np.ix_(sel % M, sel % M)] = coeff
    return np.fft.ifftn(fine) * M ** n


@dataclass(frozen=True)
class TestFunction:
    """Phase-space test function with compactly supported Fourier data.

    phi(x, eta) = (2pi)^-n sum_q int phihat(q, p) e^{i(p.eta + q.x)} dp,
    the p-integral running over the stored uniform quadrature grid on
    [-p_max, p_max]^n (trapezoid rule, >= 64 nodes per axis).  The evaluated
    phi is real whenever phihat(-q, -p) = conj phihat(q, p); it is smooth and
    rapidly decreasing in eta.
    """

    n: int
    qs: np.ndarray            # (M, n) integer x-frequencies
    phat: np.ndarray          # (M, *p_shape) complex amplitudes on the p-grid
    p_axes: tuple             # n one-dimensional node arrays
    label: str = ""

    __test__ = False          # not a pytest test class despite the name

    def __post_init__(self):
        qs = np.atleast_2d(np.asarray(self.qs, dtype=int))
        if qs.shape[1] != self.n:
            raise ConfigurationError("q frequencies must have shape (M, n)")
        phat = np.asarray(self.phat, dtype=complex)
        axes = tuple(np.asarray(a, dtype=float) for a in self.p_axes)
        if len(axes) != self.n:
            raise ConfigurationError("one p-axis per dimension required")
        for a in axes:
            if a.size < 2:
                raise ConfigurationError("p quadrature needs at least 2 nodes")
        qs = qs.copy(); qs.setflags(write=False)
        phat = phat.copy(); phat.setflags(write=False)
        object.__setattr__(self, "qs", qs)
        object.__setattr__(self, "phat", phat)
        object.__setattr__(self, "p_axes", axes)

    @property
    def q_max(self) -> int:
        return int(np.abs(self.qs).max()) if self.qs.size else 0

    def fourier_l1(self) -> float:
        """sum_q int |phihat(q, p)| dp via the stored quadrature.

        (2pi)^-n times this dominates every Wigner pairing against a unit
        L2-normalized state, since each phase-space translation is unitary.
        """
        total = 0.0
        if self.n == 1:
            w = _trapezoid_weights(self.p_axes[0])
            for m in range(self.qs.shape[0]):
                total += float(np.sum(np.abs(self.phat[m]) * w))
        else:
            w0 = _trapezoid_weights(self.p_axes[0])
            w1 = _trapezoid_weights(self.p_axes[1])
            for m in range(self.qs.shape[0]):
                total += float(np.sum(np.abs(self.phat[m]) * np.multiply.outer(w0, w1)))
        return total

    @property
    def p_max(self) -> float:
        return float(max(np.abs(a).max() for a in self.p_axes))

    def _p_transform(self, etas: np.ndarray) -> np.ndarray:
        """G_q(eta) = (2pi)^-n int phihat(q, p) e^{i p.eta} dp for each q.

        etas: (K, n) points; returns (M, K) complex.
        """
        etas = np.atleast_2d(np.asarray(etas, dtype=float))
        M = self.qs.shape[0]
        out = np.empty((M, etas.shape[0]), dtype=complex)
        if self.n == 1:
            p = self.p_axes[0]
            kernel = np.exp(1j * np.outer(etas[:, 0], p))           # (K, P)
            w = _trapezoid_weights(p)
            out[:] = (self.phat[:, None, :] * (kernel * w)[None, :, :]).sum(axis=2)
        else:
            p0, p1 = self.p_axes
            k0 = np.exp(1j * np.outer(etas[:, 0], p0))              # (K, P0)
            k1 = np.exp(1j * np.outer(etas[:, 1], p1))              # (K, P1)
            w0, w1 = _trapezoid_weights(p0), _trapezoid_weights(p1)
            for m in range(M):
                inner = (self.phat[m][None, :, :] * (k1 * w1)[:, None, :]).sum(axis=2)  # (K, P0)
                out[m] = (inner * k0 * w0).sum(axis=1)
        return out / TWO_PI ** self.n

    def eval(self, x: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """phi at paired points x (K, n) and eta (K, n); returns real (K,)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        G = self._p_transform(eta)                                   # (M, K)
        phases = np.exp(1j * (self.qs @ x.T))                        # (M, K)
        vals = (G * phases).sum(axis=0)
        return vals.real

    def eval_grid(self, grid: TorusGrid, etas: np.ndarray, derivative: int | None = None):
        """Table of phi (or of d/dx_derivative phi) on grid x lattice-eta points.

        etas: (K, n) momentum points; returns real array (*grid.shape, K).
        """
        G = self._p_transform(etas)                                  # (M, K)
        mesh = grid.meshgrid()
        out = np.zeros(grid.shape + (G.shape[1],), dtype=complex)
        for m in range(self.qs.shape[0]):
            q = self.qs[m]
            phase = np.ones(grid.shape, dtype=complex)
            for ax in range(self.n):
                phase = phase * np.exp(1j * q[ax] * mesh[ax])
            if derivative is not None:
                phase = phase * (1j * q[derivative])
            out += phase[..., None] * G[m][(None,) * self.n]
        return out.real

    def __call__(self, x, eta):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if self.n == 1 and x.ndim == 1:
            vals = self.eval(x[:, None], eta[:, None])
            return vals if vals.size > 1 else float(vals[0])
        return self.eval(x, eta)


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.empty_like(nodes)
    w[1:-1] = (nodes[2:] - nodes[:-2]) / 2.0
    w[0] = (nodes[1] - nodes[0]) / 2.0
    w[-1] = (nodes[-1] - nodes[-2]) / 2.0
    return w


def eval_test_function(phi: TestFunction, x, eta):
    """Pointwise evaluation phi(x, eta) through the stored quadrature."""
    return phi(x, eta)


def harmonic_test_function(n: int, q, p_max: float = 4.0, num_nodes: int = 129,
                           kind: str = "cos", eta_shift=None, label: str = "") -> TestFunction:
    """cos(q.x) (or sin) times the Fejer-window momentum profile.

    The p-amplitude (1 - |p|/p_max)_+ per axis gives a nonnegative, smooth
    profile decaying like |eta|^-2, the canonical member of the test class.
    An optional eta_shift recenters the momentum profile.
    """
    if num_nodes < 64:
        raise ConfigurationError("p quadrature needs at least 64 nodes")
    q = np.atleast_1d(np.asarray(q, dtype=int))
    axes = tuple(np.linspace(-p_max, p_max, num_nodes) for _ in range(n))
    window = [1.0 - np.abs(a) / p_max for a in axes]
    prof = window[0] if n == 1 else np.multiply.outer(window[0], window[1])
    prof = prof.astype(complex)
    if eta_shift is not None:
        shift = np.atleast_1d(np.asarray(eta_shift, dtype=float))
        if n == 1:
            prof = prof * np.exp(-1j * axes[0] * shift[0])
        else:
            prof = prof * np.exp(-1j * (np.add.outer(axes[0] * shift[0], axes[1] * shift[1])))
    if np.all(q == 0):
        qs = np.array([q])
        phat = np.array([prof]) * TWO_PI ** n
    else:
        # conjugate-symmetric pair so phi is real
        if kind == "cos":
            cplus = 0.5
        elif kind == "sin":
            cplus = -0.5j
        else:
            raise ConfigurationError(f"kind must be 'cos' or 'sin', got {kind}")
        qs = np.array([q, -q])
        phat = np.array([cplus * prof, np.conj(cplus) * np.conj(prof[(slice(None, None, -1),) * n])])
        phat *= TWO_PI ** n
    return TestFunction(n=n, qs=qs, phat=phat, p_axes=axes,
                        label=label or f"{kind}({q})*fejer({p_max})")


def standard_suite(n: int, q_max: int = 2, p_max: float = 4.0, num_nodes: int = 129,
                   eta_shift=None) -> list:
    """The built-in test-function suite used by limit and propagation reports."""
    suite = [harmonic_test_function(n, np.zeros(n, dtype=int), p_max, num_nodes,
                                    eta_shift=eta_shift, label="fejer")]
    for q in range(1, q_max + 1):
        qv = np.zeros(n, dtype=int)
        qv[0] = q
        for kind in ("cos", "sin"):
            suite.append(harmonic_test_function(n, qv, p_max, num_nodes, kind=kind,
                                                eta_shift=eta_shift))
        if n == 2:
            qv2 = np.zeros(n, dtype=int)
            qv2[1] = q
            suite.append(harmonic_test_function(n, qv2, p_max, num_nodes, eta_shift=eta_shift))
    return suite
