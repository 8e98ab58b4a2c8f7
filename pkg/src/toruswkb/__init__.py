"""Numerical laboratory for semiclassical analysis on the flat torus.

Subpackages cover toroidal Weyl quantization, Wigner transforms on the
momentum lattice (hbar/2) Z^n, split-step and exact Schroedinger propagation,
discrete weak KAM theory via Lax-Oleinik iteration, WKB state construction,
and the verification of monokinetic semiclassical limits and their
forward/backward push-forward propagation.
"""

__version__ = "0.1.0"

from .torus import (TorusGrid, WaveFunction, TestFunction, SpectralCoefficients,
                    make_grid, fourier_coefficients, eval_test_function)
from .errors import (AdmissibilityError, ConfigurationError, ConvergenceError,
                     GridMismatchError)

__all__ = [
    "__version__", "TorusGrid", "WaveFunction", "TestFunction",
    "SpectralCoefficients", "make_grid", "fourier_coefficients",
    "eval_test_function", "AdmissibilityError", "ConfigurationError",
    "ConvergenceError", "GridMismatchError",
]
