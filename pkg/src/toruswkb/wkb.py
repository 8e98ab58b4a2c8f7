"""WKB states: mollified amplitudes, phase assembly, currents.

Amplitude construction: with a probability measure m on the grid, a bump
profile rho and exponents (epsilon, gamma),

    a(x) = { (hbar^epsilon + (Phi_{gamma,hbar} * m)(x)) / c0 }^{1/2},
    Phi_{gamma,hbar}(u) = hbar^{-n gamma} rho(u / hbar^gamma)  (periodized),

c0 normalizing the grid integral of a^2 to 1.  The bump used here is centered
at the origin (even, mean-zero), so the mollification is second-order
accurate in its width; the floor hbar^epsilon keeps a strictly positive.
Exponents must satisfy 0 < epsilon + gamma (n+1) < 1, which bounds
hbar ||grad a||_L2 by ||rho'||_inf hbar^{1 - epsilon - (n+1) gamma}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, ConfigurationError
from .torus import TWO_PI, TorusGrid, WaveFunction, fourier_coefficients, hbar_is_admissible
from .weakkam import WeakKAMSolution


def bump_profile(u):
    """Normalized even bump on [-pi, pi]: C exp(-1 / (1 - (u/pi)^2))."""
    u = np.asarray(u, dtype=float)
    s = u / np.pi
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out / _BUMP_NORM


def _raw_bump(u):
    s = u / np.pi
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


_BUMP_NORM = integrate.quad(lambda t: float(_raw_bump(np.array([t]))[0]),
                            -np.pi, np.pi, limit=200)[0]

BUMP_GRAD_SUP = float(np.max(np.abs(np.gradient(
    bump_profile(np.linspace(-np.pi, np.pi, 20001)), np.linspace(-np.pi, np.pi, 20001)))))


@dataclass(frozen=True)
class AmplitudeSpec:
    """Target measure weights plus mollifier exponents for amplitude building."""

    grid: TorusGrid
    m_weights: np.ndarray      # probability weights on the grid
    epsilon: float = 0.2
    gamma: float = 0.1

    def __post_init__(self):
        w = np.asarray(self.m_weights, dtype=float)
        if w.shape != self.grid.shape:
            raise ConfigurationError("measure weights must live on the grid")
        if (w < -1e-15).any():
            raise ConfigurationError("measure weights must be nonnegative")
        total = w.sum()
        if total <= 0:
            raise ConfigurationError("measure weights must have positive mass")
        w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "m_weights", w)
        n = self.grid.n
        if not (0.0 < self.epsilon + self.gamma * (n + 1) < 1.0):
            raise ConfigurationError(
                f"exponents violate 0 < epsilon + gamma(n+1) < 1: "
                f"epsilon={self.epsilon}, gamma={self.gamma}, n={n}")


def _wrap(u):
    """Minimal-norm representative on (-pi, pi]."""
    return (u + np.pi) % TWO_PI - np.pi


def mollifier(gamma: float, hbar: float, u) -> np.ndarray:
    """Periodized rescaled bump Phi_{gamma,hbar} at displacement u (per axis)."""
    width = hbar ** gamma
    return bump_profile(_wrap(u) / width) / width


@dataclass(frozen=True)
class Amplitude:
    """Built amplitude with its normalization constant and scaling data."""

    grid: TorusGrid
    values: np.ndarray
    c0: float
    hbar: float
    epsilon: float
    gamma: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.values ** 2)))

    def grad_l2(self) -> float:
        """||grad a||_L2 by spectral differentiation."""
        coeff = np.fft.fftn(self.values) / self.grid.N ** self.grid.n
        modes = self.grid.modes
        total = 0.0
        for ax in range(self.grid.n):
            shape = [1] * self.grid.n
            shape[ax] = self.grid.N
            d = coeff * (1j * modes.reshape(shape))
            g = np.fft.ifftn(d) * self.grid.N ** self.grid.n
            total += self.grid.integrate(np.abs(g) ** 2)
        return float(np.sqrt(total))

    def positivity_floor(self) -> float:
        return float(self.hbar ** (self.epsilon / 2) / np.sqrt(self.c0))


def build_amplitude(spec: AmplitudeSpec, hbar: float) -> Amplitude:
    """a = sqrt((hbar^eps + Phi * m) / c0) on the grid, integral of a^2 = 1."""
    if hbar <= 0 or hbar > 1:
        raise ConfigurationError(f"hbar must lie in (0, 1], got {hbar}")
    grid = spec.grid
    n = grid.n
    width = hbar ** spec.gamma
    ax = grid.axis
    # convolution against the discrete measure: sum_i w_i Phi(x_j - x_i)
    diff = _wrap(ax[:, None] - ax[None, :])            # (N, N) pairwise per axis
    phi_ax = bump_profile(diff / width) / width
    if n == 1:
        conv = phi_ax @ spec.m_weights
    else:
        # product bump: contract each axis in turn
        conv = np.einsum("ia,jb,ab->ij", phi_ax, phi_ax, spec.m_weights)
    dens = hbar ** spec.epsilon + conv
    c0 = float(grid.integrate(dens))
    a = np.sqrt(dens / c0)
    return Amplitude(grid=grid, values=a, c0=c0, hbar=hbar,
                     epsilon=spec.epsilon, gamma=spec.gamma)


@dataclass(frozen=True)
class WKBState:
    """phi = a e^{i (P.x + v(x)) / hbar} with its construction record."""

    psi: WaveFunction
    P: np.ndarray
    v: WeakKAMSolution
    amplitude: np.ndarray
    hbar: float
    ell: float
    kam_type: str

    def __post_init__(self):
        for name in ("P", "amplitude"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def build_wkb(P, v: WeakKAMSolution, a, hbar: float, ell: float = 1.0) -> WKBState:
    """Assemble the WKB state; hard admissibility gate on hbar.

    Admissibility (1/hbar in (1/ell) N together with P in ell Z^n) makes
    e^{i P.x / hbar} single-valued on the torus.
    """
    if not hbar_is_admissible(hbar, ell):
        raise AdmissibilityError(
            f"hbar={hbar} inadmissible: 1/hbar must lie in (1/ell) N with ell={ell} "
            f"(P in ell Z^n requires ell/hbar to be a positive integer)")
    P = np.atleast_1d(np.asarray(P, dtype=float))
    if np.abs(P / ell - np.round(P / ell)).max() > 1e-9:
        raise AdmissibilityError(f"P={P} not on the momentum lattice ell Z^n (ell={ell})")
    grid = v.grid
    avals = a.values if isinstance(a, Amplitude) else np.asarray(a, dtype=float)
    if avals.shape != grid.shape:
        raise ConfigurationError("amplitude must live on the weak KAM grid")
    if grid.n == 1:
        phase = P[0] * grid.axis + v.v
    else:
        X0, X1 = grid.meshgrid()
        phase = P[0] * X0 + P[1] * X1 + v.v
    values = avals * np.exp(1j * phase / hbar)
    psi = WaveFunction(grid, values, hbar, ell)
    nrm = psi.norm()
    if abs(nrm - 1.0) > 1e-10:
        psi = psi.normalized()
    return WKBState(psi=psi, P=P, v=v, amplitude=avals, hbar=hbar, ell=ell,
                    kam_type=v.kam_type)


def current(psi: WaveFunction) -> np.ndarray:
    """J = hbar Im(conj(psi) grad psi), spectral gradient.

    For a WKB state this equals (P + grad v) a^2 away from kinks.
    """
    grid = psi.grid
    coeff = np.fft.fftn(psi.values) / grid.N ** grid.n
    modes = grid.modes
    out = []
    for ax in range(grid.n):
        shape = [1] * grid.n
        shape[ax] = grid.N
        g = np.fft.ifftn(coeff * (1j * modes.reshape(shape))) * grid.N ** grid.n
        out.append(psi.hbar * np.imag(np.conj(psi.values) * g))
    return out[0] if grid.n == 1 else np.stack(out, axis=-1)


DEFAULT_F_SUITE = (
    ("sin(x)", lambda x: np.cos(x)),
    ("cos(x)", lambda x: -np.sin(x)),
    ("sin(2x)", lambda x: 2.0 * np.cos(2 * x)),
    ("cos(2x)", lambda x: -2.0 * np.sin(2 * x)),
)


def current_divergence_test(state: WKBState, f_suite=DEFAULT_F_SUITE) -> float:
    """max over the suite of |int grad f . J dx| (the weak free-current defect)."""
    grid = state.psi.grid
    J = current(state.psi)
    worst = 0.0
    if grid.n == 1:
        x = grid.axis
        for _, df in f_suite:
            worst = max(worst, abs(float(grid.integrate(df(x) * J))))
    else:
        mesh = grid.meshgrid()
        for _, df in f_suite:
            gx = df(mesh[0])
            worst = max(worst, abs(float(grid.integrate(gx * J[..., 0]))))
    return worst


def write_state_csv(path, state: WKBState) -> None:
    """CSV (x, Re psi, Im psi, a, phase) + JSON metadata sidecar (n=1)."""
    grid = state.psi.grid
    if grid.n != 1:
        raise ConfigurationError("state CSV dump implemented for n=1")
    x = grid.axis
    vals = state.psi.values
    with open(str(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "re_psi", "im_psi", "a", "phase"])
        for j in range(grid.N):
            writer.writerow([repr(float(x[j])), repr(float(vals[j].real)),
                             repr(float(vals[j].imag)), repr(float(state.amplitude[j])),
                             repr(float(np.angle(vals[j])))])
    meta = {"P": [float(p) for p in state.P], "hbar": state.hbar,
            "ell": state.ell, "weak_kam_type": state.kam_type}
    with open(str(path).rsplit(".", 1)[0] + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
