"""Hot-loop kernels with a compiled core and a NumPy fallback.

The Lax-Oleinik value-iteration sweep and velocity-Verlet particle flows
dominate runtime; both exist as a Cython extension (built by setup.py) and as
pure NumPy implementations.  The extension is preferred when importable; set
TORUSWKB_KERNELS=numpy to force the fallback.  ``BACKEND`` records the choice.
"""

import os

from . import _numpy as numpy_impl

_forced = os.environ.get("TORUSWKB_KERNELS", "").strip().lower()

compiled_impl = None
if _forced not in ("numpy", "python"):
    try:
        from . import _compiled as compiled_impl  # type: ignore
    except ImportError:
        compiled_impl = None

# Benchmarked crossover: the scalar compiled Verlet wins below a few hundred
# particles (no per-step Python overhead), NumPy's vectorized transcendentals
# win on large ensembles.  See benchmarks/bench_kernels.py.
_VERLET_CROSSOVER = 256

if compiled_impl is not None:
    BACKEND = "compiled"
    lax_step_1d = compiled_impl.lax_step_1d
    lax_step_2d = numpy_impl.lax_step_2d

    def verlet_flow_1d(x, eta, freqs, coefs, dt, nsteps):
        impl = compiled_impl if len(x) <= _VERLET_CROSSOVER else numpy_impl
        return impl.verlet_flow_1d(x, eta, freqs, coefs, dt, nsteps)

    def verlet_flow_2d(x, eta, freqs, coefs, dt, nsteps):
        impl = compiled_impl if len(x) <= _VERLET_CROSSOVER else numpy_impl
        return impl.verlet_flow_2d(x, eta, freqs, coefs, dt, nsteps)
else:
    BACKEND = "numpy"
    lax_step_1d = numpy_impl.lax_step_1d
    lax_step_2d = numpy_impl.lax_step_2d
    verlet_flow_1d = numpy_impl.verlet_flow_1d
    verlet_flow_2d = numpy_impl.verlet_flow_2d

__all__ = ["BACKEND", "numpy_impl", "compiled_impl",
           "lax_step_1d", "lax_step_2d", "verlet_flow_1d", "verlet_flow_2d"]
