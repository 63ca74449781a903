"""Compiled loops for one butterfly factor, forward and backward.

Inputs are 2-D C-contiguous float64 arrays ``[vector, n]``.  ``vals`` is the
factor's ``(2n, 2)`` value table ordered by row, entry 0 hitting the upper
element of the butterfly pair and entry 1 the lower one.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def stage_forward(vals, half, xr, xi, yr, yi):
    nvec, n = xr.shape
    L = 2 * half
    for b in range(nvec):
        for start in range(0, n, L):
            for p in range(half):
                t = start + p
                u = t + half
                tr = xr[b, t]
                ti = xi[b, t]
                ur = xr[b, u]
                ui = xi[b, u]
                ar = vals[2 * t, 0]
                ai = vals[2 * t, 1]
                cr = vals[2 * t + 1, 0]
                ci = vals[2 * t + 1, 1]
                yr[b, t] = ar * tr - ai * ti + cr * ur - ci * ui
                yi[b, t] = ar * ti + ai * tr + cr * ui + ci * ur
                ar = vals[2 * u, 0]
                ai = vals[2 * u, 1]
                cr = vals[2 * u + 1, 0]
                ci = vals[2 * u + 1, 1]
                yr[b, u] = ar * tr - ai * ti + cr * ur - ci * ui
                yi[b, u] = ar * ti + ai * tr + cr * ui + ci * ur


@numba.njit(cache=True)
def stage_backward(vals, half, xr, xi, gr, gi, gv, gxr, gxi):
    """Accumulate into ``gv`` and overwrite ``gxr, gxi``."""
    nvec, n = xr.shape
    L = 2 * half
    for b in range(nvec):
        for start in range(0, n, L):
            for p in range(half):
                t = start + p
                u = t + half
                tr = xr[b, t]
                ti = xi[b, t]
                ur = xr[b, u]
                ui = xi[b, u]
                g1r = gr[b, t]
                g1i = gi[b, t]
                g2r = gr[b, u]
                g2i = gi[b, u]
                gv[2 * t, 0] += g1r * tr + g1i * ti
                gv[2 * t, 1] += g1i * tr - g1r * ti
                gv[2 * t + 1, 0] += g1r * ur + g1i * ui
                gv[2 * t + 1, 1] += g1i * ur - g1r * ui
                gv[2 * u, 0] += g2r * tr + g2i * ti
                gv[2 * u, 1] += g2i * tr - g2r * ti
                gv[2 * u + 1, 0] += g2r * ur + g2i * ui
                gv[2 * u + 1, 1] += g2i * ur - g2r * ui
                a1r = vals[2 * t, 0]
                a1i = vals[2 * t, 1]
                c1r = vals[2 * t + 1, 0]
                c1i = vals[2 * t + 1, 1]
                a2r = vals[2 * u, 0]
                a2i = vals[2 * u, 1]
                c2r = vals[2 * u + 1, 0]
                c2i = vals[2 * u + 1, 1]
                gxr[b, t] = a1r * g1r + a1i * g1i + a2r * g2r + a2i * g2i
                gxi[b, t] = a1r * g1i - a1i * g1r + a2r * g2i - a2i * g2r
                gxr[b, u] = c1r * g1r + c1i * g1i + c2r * g2r + c2i * g2i
                gxi[b, u] = c1r * g1i - c1i * g1r + c2r * g2i - c2i * g2r


@numba.njit(cache=True)
def stack_forward(vals, perm, xr, xi, yr, yi):
    """Permutation then every factor; ``vals`` is ``[stage, 2n, 2]``, stage 1 first."""
    nvec, n = xr.shape
    nst = vals.shape[0]
    buf = np.empty((2, 2, n))
    for b in range(nvec):
        for i in range(n):
            buf[0, 0, i] = xr[b, perm[i]]
            buf[0, 1, i] = xi[b, perm[i]]
        half = 1
        cur = 0
        for k in range(nst):
            L = 2 * half
            sr = buf[cur, 0]
            si = buf[cur, 1]
            dr = buf[1 - cur, 0]
            di = buf[1 - cur, 1]
            v = vals[k]
            for start in range(0, n, L):
                for p in range(half):
                    t = start + p
                    u = t + half
                    tr = sr[t]
                    ti = si[t]
                    ur = sr[u]
                    ui = si[u]
                    dr[t] = v[2 * t, 0] * tr - v[2 * t, 1] * ti + v[2 * t + 1, 0] * ur - v[2 * t + 1, 1] * ui
                    di[t] = v[2 * t, 0] * ti + v[2 * t, 1] * tr + v[2 * t + 1, 0] * ui + v[2 * t + 1, 1] * ur
                    dr[u] = v[2 * u, 0] * tr - v[2 * u, 1] * ti + v[2 * u + 1, 0] * ur - v[2 * u + 1, 1] * ui
                    di[u] = v[2 * u, 0] * ti + v[2 * u, 1] * tr + v[2 * u + 1, 0] * ui + v[2 * u + 1, 1] * ur
            cur = 1 - cur
            half *= 2
        for i in range(n):
            yr[b, i] = buf[cur, 0, i]
            yi[b, i] = buf[cur, 1, i]


def as_matrix(a, n):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1, n)
