"""NumPy reference implementations of the hot kernels.

These are the semantics contract for the compiled versions: the benchmark and
the kernel tests run both and compare results bitwise-tight.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def lax_step_1d(u, v_half, h, P, W, sign, refine=True):
    """One discrete Lax-Oleinik sweep on the circle.

    u:       (N,) current values on the grid x_j = 2pi j / N.
    v_half:  (2N,) potential on the half-step grid x = pi m / N (midpoints of
             straight segments land there).
    h:       time step of the semigroup.
    P:       momentum shift (scalar).
    W:       search half-width in grid cells; candidate displacements are
             d = o dx, o in [-W, W].
    sign:    -1 for the negative (min) semigroup, +1 for the positive (max).
    refine:  parabolic sub-grid refinement of the extremum.

    Candidate value at x_j with displacement d = x_j - y:
        sign=-1:  u(y) + h [ (d/h)^2 / 2 - V((x_j+y)/2) ] - P d
        sign=+1:  u(y) - h [ (d/h)^2 / 2 - V((x_j+y)/2) ] - P d
    (the positive semigroup maximizes the reversed twisted action, so the
    momentum term keeps its sign while kinetic and potential terms flip).
    """
    u = np.asarray(u, dtype=float)
    N = u.size
    dx = TWO_PI / N
    offsets = np.arange(-W, W + 1)
    cand = np.empty((offsets.size, N))
    for i, o in enumerate(offsets):
        d = o * dx
        kin = 0.5 * d * d / h
        vm = np.roll(v_half, o)[::2]          # V((x_j + y)/2) = V(x_j - d/2)
        uy = np.roll(u, o)                    # u(x_j - d)
        if sign < 0:
            cand[i] = uy + kin - h * vm - P * d
        else:
            cand[i] = uy - kin + h * vm - P * d
    if sign < 0:
        best = np.argmin(cand, axis=0)
    else:
        best = np.argmax(cand, axis=0)
    cols = np.arange(N)
    vals = cand[best, cols]
    if refine:
        interior = (best > 0) & (best < offsets.size - 1)
        if interior.any():
            b = best[interior]
            jc = cols[interior]
            f0 = cand[b - 1, jc]
            f1 = cand[b, jc]
            f2 = cand[b + 1, jc]
            denom = f0 - 2.0 * f1 + f2
            curv_ok = denom > 0 if sign < 0 else denom < 0
            inside = np.abs(f0 - f2) <= 2.0 * np.abs(denom)
            ok = curv_ok & inside
            corr = np.zeros_like(f1)
            corr[ok] = -((f0 - f2)[ok] ** 2) / (8.0 * denom[ok])
            vals[interior] = f1 + corr
    return vals


def lax_step_2d(u, v_half, h, P, W, sign, refine=True):
    """Two-dimensional sweep over the square window |o|_inf <= W.

    Sub-grid refinement applies the two axis-aligned parabolic corrections at
    the discrete extremum (exact for candidate surfaces separable in the two
    displacement components, e.g. the free flow).
    """
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    dx = TWO_PI / N
    P = np.asarray(P, dtype=float)
    width = 2 * W + 1
    stack = np.empty((width, width, N, N))
    for o0 in range(-W, W + 1):
        d0 = o0 * dx
        for o1 in range(-W, W + 1):
            d1 = o1 * dx
            kin = 0.5 * (d0 * d0 + d1 * d1) / h
            vm = np.roll(np.roll(v_half, o0, axis=0), o1, axis=1)[::2, ::2]
            uy = np.roll(np.roll(u, o0, axis=0), o1, axis=1)
            pd = P[0] * d0 + P[1] * d1
            if sign < 0:
                stack[o0 + W, o1 + W] = uy + kin - h * vm - pd
            else:
                stack[o0 + W, o1 + W] = uy - kin + h * vm - pd
    flat = stack.reshape(width * width, N, N)
    best = flat.argmin(axis=0) if sign < 0 else flat.argmax(axis=0)
    b0, b1 = np.unravel_index(best, (width, width))
    jj, kk = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    vals = stack[b0, b1, jj, kk]
    if refine:
        interior = (b0 > 0) & (b0 < width - 1) & (b1 > 0) & (b1 < width - 1)
        if interior.any():
            i0, i1 = b0[interior], b1[interior]
            ij, ik = jj[interior], kk[interior]
            f1 = stack[i0, i1, ij, ik]
            corr = np.zeros_like(f1)
            for axis_lo, axis_hi in (((i0 - 1, i1), (i0 + 1, i1)),
                                     ((i0, i1 - 1), (i0, i1 + 1))):
                f0 = stack[axis_lo[0], axis_lo[1], ij, ik]
                f2 = stack[axis_hi[0], axis_hi[1], ij, ik]
                denom = f0 - 2.0 * f1 + f2
                curv_ok = denom > 0 if sign < 0 else denom < 0
                inside = np.abs(f0 - f2) <= 2.0 * np.abs(denom)
                ok = curv_ok & inside
                corr[ok] += -((f0 - f2)[ok] ** 2) / (8.0 * denom[ok])
            vals[interior] = f1 + corr
    return vals


def _force_1d(x, freqs, coefs):
    """-V'(x) for V(x) = sum_m coefs[m] cos(freqs[m] x)."""
    F = np.zeros_like(x)
    for k, c in zip(freqs, coefs):
        F += c * k * np.sin(k * x)
    return F


def verlet_flow_1d(x, eta, freqs, coefs, dt, nsteps):
    """Velocity-Verlet flow of particle arrays under H = eta^2/2 + V(x)."""
    x = np.array(x, dtype=float)
    v = np.array(eta, dtype=float)
    F = _force_1d(x, freqs, coefs)
    for _ in range(nsteps):
        vh = v + 0.5 * dt * F
        x += dt * vh
        F = _force_1d(x, freqs, coefs)
        v = vh + 0.5 * dt * F
    return x % TWO_PI, v


def _force_2d(x, freqs, coefs):
    F = np.zeros_like(x)
    for k, c in zip(freqs, coefs):
        s = c * np.sin(x @ k)
        F += s[:, None] * k[None, :]
    return F


def verlet_flow_2d(x, eta, freqs, coefs, dt, nsteps):
    x = np.array(x, dtype=float)
    v = np.array(eta, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    F = _force_2d(x, freqs, coefs)
    for _ in range(nsteps):
        vh = v + 0.5 * dt * F
        x += dt * vh
        F = _force_2d(x, freqs, coefs)
        v = vh + 0.5 * dt * F
    return x % TWO_PI, v
