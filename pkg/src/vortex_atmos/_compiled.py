"""Compiled inner loops for the panel quadrature.

Each routine sums ``w * f * K(x, y)`` over the quadrature nodes of a list of
(point, panel) pairs.  The kernels mirror :mod:`vortex_atmos.kernels`; the
complete elliptic integrals come from the arithmetic-geometric mean with the
complementary parameter supplied from geometry (A / B), which keeps K
accurate next to the logarithmic singularity.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .kernels import _F_COEF, _G_COEF, _KME_COEF, _SERIES_M

_COEF = np.ascontiguousarray(_G_COEF[1:][::-1])
_KME = np.ascontiguousarray(_KME_COEF[::-1])
_F = np.ascontiguousarray(_F_COEF[::-1])
_INV_PI = 1.0 / math.pi
_INV_TWO_PI = 0.5 / math.pi
_INV_FOUR_PI = 0.25 / math.pi

RING, DIPOLE, RING_AXIS = 0, 1, 2
KERNEL_IDS = {"ring": RING, "dipole": DIPOLE, "ring_axis": RING_AXIS}
N_COMPONENTS = {RING: 3, DIPOLE: 3, RING_AXIS: 1}


@njit(cache=True)
def agm_KE(m, m1):
    """K(m), E(m) from a_0 = 1, b_0 = sqrt(1 - m) with 1 - m given separately."""
    a = 1.0
    b = math.sqrt(m1)
    p = 0.5
    s = p * m
    for _ in range(64):
        c = 0.5 * (a - b)
        an = 0.5 * (a + b)
        b = math.sqrt(a * b)
        a = an
        p *= 2.0
        s += p * c * c
        if abs(c) <= 2.2e-16 * a:
            break
    K = 0.5 * math.pi / a
    return K, K * (1.0 - s)


@njit(cache=True)
def _ring_point(r, z, rp, zp):
    dz = z - zp
    A = (r - rp) * (r - rp) + dz * dz
    B = (r + rp) * (r + rp) + dz * dz
    m = min(4.0 * r * rp / B, 1.0)
    K, E = agm_KE(m, A / B)
    m1 = A / B
    if m < _SERIES_M:
        g = 0.0
        for c in _COEF:
            g = (g + c) * m
        kme = 0.0
        for c in _KME:
            kme = kme * m + c
        f = 0.0
        for c in _F:
            f = f * m + c
    else:
        g = ((2.0 - m) * K - 2.0 * E) / m
        kme = K - E
        f = (1.0 - 0.5 * m) * E - m1 * K
    sqB = math.sqrt(B)
    G = r * rp * g * _INV_PI / sqB
    dGdz = -dz * _INV_TWO_PI / sqB * f / m1
    vz = (kme + 2.0 * rp * (rp - r) * E / A) * _INV_TWO_PI / sqB
    return G, dGdz, vz


@njit(cache=True)
def _dipole_point(x1, x2, y1, y2):
    d1 = x1 - y1
    dm2 = d1 * d1 + (x2 - y2) * (x2 - y2)
    dp2 = d1 * d1 + (x2 + y2) * (x2 + y2)
    q = 4.0 * x2 * y2
    G = math.log1p(q / dm2) * _INV_FOUR_PI
    dG1 = -d1 * q * _INV_TWO_PI / (dm2 * dp2)
    dG2 = ((x2 + y2) / dp2 - (x2 - y2) / dm2) * _INV_TWO_PI
    return G, dG1, dG2


@njit(cache=True)
def accumulate(kind, x0, x1, pid, pan, Y0, Y1, WF, out):
    """out[:, pid[i]] += sum_j WF[pan[i], j] K(x[pid[i]], Y[pan[i], j])."""
    nq = Y0.shape[1]
    for i in range(pid.size):
        p = pid[i]
        k = pan[i]
        a = x0[p]
        b = x1[p]
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        if kind == RING:
            for j in range(nq):
                w = WF[k, j]
                # a node landing exactly on the target carries no measure
                if w == 0.0 or (Y0[k, j] == a and Y1[k, j] == b):
                    continue
                g0, g1, g2 = _ring_point(b, a, Y1[k, j], Y0[k, j])
                s0 += w * g0
                s1 += w * g1
                s2 += w * g2
        elif kind == DIPOLE:
            for j in range(nq):
                w = WF[k, j]
                # a node landing exactly on the target carries no measure
                if w == 0.0 or (Y0[k, j] == a and Y1[k, j] == b):
                    continue
                g0, g1, g2 = _dipole_point(a, b, Y0[k, j], Y1[k, j])
                s0 += w * g0
                s1 += w * g1
                s2 += w * g2
        else:
            for j in range(nq):
                w = WF[k, j]
                # a node landing exactly on the target carries no measure
                if w == 0.0 or (Y0[k, j] == a and Y1[k, j] == b):
                    continue
                rp = Y1[k, j]
                dz = a - Y0[k, j]
                d2 = rp * rp + dz * dz
                s0 += w * 0.5 * rp * rp / (d2 * math.sqrt(d2))
        out[0, p] += s0
        if out.shape[0] > 1:
            out[1, p] += s1
            out[2, p] += s2


@njit(cache=True)
def ring_kernels_compiled(r, z, rp, zp):
    """Vectorised wrapper used by tests to compare with the reference kernels."""
    n = r.size
    out = np.empty((3, n))
    for i in range(n):
        g0, g1, g2 = _ring_point(r[i], z[i], rp[i], zp[i])
        out[0, i] = g0
        out[1, i] = g1
        out[2, i] = g2
    return out
