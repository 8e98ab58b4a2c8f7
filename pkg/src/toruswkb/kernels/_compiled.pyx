# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; semantics match kernels._numpy exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sin, fabs

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925286766559


def lax_step_1d(u, v_half, double h, double P, int W, int sign, bint refine=True):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] vh = np.ascontiguousarray(v_half, dtype=np.float64)
    cdef Py_ssize_t N = uv.shape[0]
    cdef Py_ssize_t M = vh.shape[0]
    out_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double dx = TWO_PI / N
    cdef Py_ssize_t j, idx
    cdef int o, best
    cdef double d, kin, val, bestval, f0, f1, f2, denom, corr
    cdef double sgn = 1.0 if sign > 0 else -1.0
    for j in range(N):
        bestval = 0.0
        best = -W - 1
        for o in range(-W, W + 1):
            d = o * dx
            kin = 0.5 * d * d / h
            # u index (j - o) mod N, half-grid index (2j - o) mod 2N
            idx = (j - o) % N
            if idx < 0:
                idx += N
            val = uv[idx]
            idx = (2 * j - o) % M
            if idx < 0:
                idx += M
            if sign < 0:
                val += kin - h * vh[idx] - P * d
                if best < -W or val < bestval:
                    bestval = val
                    best = o
            else:
                val += -kin + h * vh[idx] - P * d
                if best < -W or val > bestval:
                    bestval = val
                    best = o
        if refine and -W < best < W:
            f1 = bestval
            o = best - 1
            d = o * dx
            idx = (j - o) % N
            if idx < 0:
                idx += N
            f0 = uv[idx]
            idx = (2 * j - o) % M
            if idx < 0:
                idx += M
            if sign < 0:
                f0 += 0.5 * d * d / h - h * vh[idx] - P * d
            else:
                f0 += -0.5 * d * d / h + h * vh[idx] - P * d
            o = best + 1
            d = o * dx
            idx = (j - o) % N
            if idx < 0:
                idx += N
            f2 = uv[idx]
            idx = (2 * j - o) % M
            if idx < 0:
                idx += M
            if sign < 0:
                f2 += 0.5 * d * d / h - h * vh[idx] - P * d
            else:
                f2 += -0.5 * d * d / h + h * vh[idx] - P * d
            denom = f0 - 2.0 * f1 + f2
            if (denom > 0 if sign < 0 else denom < 0) and fabs(f0 - f2) <= 2.0 * fabs(denom):
                corr = -((f0 - f2) * (f0 - f2)) / (8.0 * denom)
                bestval = f1 + corr
        out[j] = bestval
    return out_arr


def verlet_flow_1d(x, eta, freqs, coefs, double dt, long nsteps):
    cdef double[::1] xv = np.array(x, dtype=np.float64)
    cdef double[::1] vv = np.array(eta, dtype=np.float64)
    cdef long[::1] kv = np.ascontiguousarray(freqs, dtype=np.int64)
    cdef double[::1] cv = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t npart = xv.shape[0]
    cdef Py_ssize_t nk = kv.shape[0]
    cdef Py_ssize_t i, m
    cdef long step
    cdef double F, vh, xi, vi
    for i in range(npart):
        xi = xv[i]
        vi = vv[i]
        F = 0.0
        for m in range(nk):
            F += cv[m] * kv[m] * sin(kv[m] * xi)
        for step in range(nsteps):
            vh = vi + 0.5 * dt * F
            xi += dt * vh
            F = 0.0
            for m in range(nk):
                F += cv[m] * kv[m] * sin(kv[m] * xi)
            vi = vh + 0.5 * dt * F
        xv[i] = xi % TWO_PI
        if xv[i] < 0:
            xv[i] += TWO_PI
        vv[i] = vi
    return np.asarray(xv), np.asarray(vv)


def verlet_flow_2d(x, eta, freqs, coefs, double dt, long nsteps):
    cdef double[:, ::1] xv = np.array(x, dtype=np.float64)
    cdef double[:, ::1] vv = np.array(eta, dtype=np.float64)
    cdef double[:, ::1] kv = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t npart = xv.shape[0]
    cdef Py_ssize_t nk = kv.shape[0]
    cdef Py_ssize_t i, m
    cdef long step
    cdef double F0, F1, s, vh0, vh1, x0, x1, v0, v1
    for i in range(npart):
        x0 = xv[i, 0]; x1 = xv[i, 1]
        v0 = vv[i, 0]; v1 = vv[i, 1]
        F0 = 0.0; F1 = 0.0
        for m in range(nk):
            s = cv[m] * sin(kv[m, 0] * x0 + kv[m, 1] * x1)
            F0 += s * kv[m, 0]
            F1 += s * kv[m, 1]
        for step in range(nsteps):
            vh0 = v0 + 0.5 * dt * F0
            vh1 = v1 + 0.5 * dt * F1
            x0 += dt * vh0
            x1 += dt * vh1
            F0 = 0.0; F1 = 0.0
            for m in range(nk):
                s = cv[m] * sin(kv[m, 0] * x0 + kv[m, 1] * x1)
                F0 += s * kv[m, 0]
                F1 += s * kv[m, 1]
            v0 = vh0 + 0.5 * dt * F0
            v1 = vh1 + 0.5 * dt * F1
        xv[i, 0] = x0 % TWO_PI
        xv[i, 1] = x1 % TWO_PI
        if xv[i, 0] < 0: xv[i, 0] += TWO_PI
        if xv[i, 1] < 0: xv[i, 1] += TWO_PI
        vv[i, 0] = v0
        vv[i, 1] = v1
    return np.asarray(xv), np.asarray(vv)
