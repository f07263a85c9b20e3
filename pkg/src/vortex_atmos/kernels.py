"""Green's functions for the odd dipole (2D) and the axisymmetric ring (3D).

The 3D kernel is

    G(r, z, r', z') = r r' / (2 pi) * int_0^pi cos(t) / sqrt(r^2 + r'^2 - 2 r r' cos t + (z - z')^2) dt

and is evaluated through complete elliptic integrals.  The defining
integral is kept as a slow reference path (``method="quadrature"``).
All array functions broadcast over their arguments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ellipe, ellipk, ellipkm1

TWO_PI = 2.0 * np.pi

# below this modulus the G combination (2-m)K - 2E cancels; use its power series
_SERIES_M = 0.25
_N_SERIES = 48


class KernelSingularity(ValueError):
    """Raised when the field point coincides with a source point."""


def _series_coefficients(n: int) -> np.ndarray:
    # ((2-m)K - 2E)/m = pi/2 * sum_{j>=1} c_j^2 j/(j+1) m^j,  c_j = (2j-1)!!/(2j)!!
    c = np.ones(n + 1)
    for j in range(1, n + 1):
        c[j] = c[j - 1] * (2 * j - 1) / (2 * j)
    j = np.arange(n + 1)
    coef = 0.5 * np.pi * c**2 * j / (j + 1.0)
    coef[0] = 0.0
    return coef


_G_COEF = _series_coefficients(_N_SERIES)


def _KE_series(n: int):
    """Power-series coefficients of K and E (index = power of m)."""
    c = np.ones(n + 1)
    for j in range(1, n + 1):
        c[j] = c[j - 1] * (2 * j - 1) / (2 * j)
    j = np.arange(n + 1)
    kc = 0.5 * np.pi * c**2
    ec = -0.5 * np.pi * c**2 / (2 * j - 1)
    return kc, ec


def _cancelling_coefficients(n: int):
    kc, ec = _KE_series(n)
    kme = kc - ec  # K - E, starts at m^1
    kme[0] = 0.0
    # (1 - m/2) E - (1 - m) K, starts at m^2
    f = ec - kc
    f[1:] += kc[:-1] - 0.5 * ec[:-1]
    f[:2] = 0.0
    return kme, f


_KME_COEF, _F_COEF = _cancelling_coefficients(_N_SERIES)


def _horner(coef, m):
    acc = np.zeros_like(m)
    for c in coef[::-1]:
        acc = acc * m + c
    return acc


def complete_elliptic_KE(m):
    """Complete elliptic integrals K(m), E(m) in the parameter convention m = k^2.

    Raises ``ValueError`` for m outside [0, 1).
    """
    m_arr = np.asarray(m, dtype=float)
    if np.any(np.isnan(m_arr)) or np.any(m_arr < 0.0) or np.any(m_arr >= 1.0):
        raise ValueError("elliptic parameter must lie in [0, 1)")
    K = ellipk(m_arr)
    E = ellipe(m_arr)
    if m_arr.ndim == 0:
        return float(K), float(E)
    return K, E


def _KE_from_m1(m, m1):
    """K and E from the parameter and its complement computed independently.

    ``m1 = 1 - m`` must come from geometry (A/B), not from subtraction, so that
    K keeps full precision near the log singularity.
    """
    K = ellipkm1(m1)
    E = ellipe(m)
    return K, E


def _g_combination(m, K, E):
    """((2 - m) K - 2 E) / m, cancellation-free for small m."""
    out = np.empty_like(m)
    small = m < _SERIES_M
    if np.any(small):
        ms = m[small]
        acc = np.zeros_like(ms)
        for c in _G_COEF[:0:-1]:
            acc = (acc + c) * ms
        out[small] = acc
    big = ~small
    if np.any(big):
        mb = m[big]
        out[big] = ((2.0 - mb) * K[big] - 2.0 * E[big]) / mb
    return out


def _geometry(r, z, rp, zp):
    r, z, rp, zp = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, z, rp, zp)))
    dz = z - zp
    A = (r - rp) ** 2 + dz**2
    B = (r + rp) ** 2 + dz**2
    return r, rp, dz, A, B


def ring_kernels(r, z, rp, zp):
    """Stream kernel and its derivatives for a unit-strength ring source.

    Returns ``(G, dG_dz, vz)`` where ``vz = (dG/dr) / r`` is the axial velocity
    kernel, finite on the axis r = 0.  Coincident points give inf/nan; callers
    never evaluate there.
    """
    r, rp, dz, A, B = _geometry(r, z, rp, zp)
    sqB = np.sqrt(B)
    # rounding can push 4rr'/B a hair above 1 when the points nearly coincide
    m = np.minimum(4.0 * r * rp / B, 1.0)
    m1 = A / B
    K, E = _KE_from_m1(m, m1)
    g = _g_combination(m, K, E)
    G = r * rp / np.pi * g / sqB
    # a E / A - K = ((1 - m/2) E - (1 - m) K) / (1 - m) and K - E both cancel
    # for small m; use their power series there
    small = m < _SERIES_M
    f = (1.0 - 0.5 * m) * E - m1 * K
    kme = K - E
    if np.any(small):
        f = np.where(small, _horner(_F_COEF, m), f)
        kme = np.where(small, _horner(_KME_COEF, m), kme)
    dGdz = -dz / (TWO_PI * sqB) * f / m1
    vz = (kme + 2.0 * rp * (rp - r) * E / A) / (TWO_PI * sqB)
    return G, dGdz, vz


def _check_ring_args(r, z, rp, zp):
    vals = np.array([r, z, rp, zp], dtype=float)
    if np.any(np.isnan(vals)):
        raise ValueError("NaN kernel argument")
    if r < 0.0 or rp < 0.0:
        raise ValueError("negative radius")
    if r == rp and z == zp:
        raise KernelSingularity("kernel singularity: coincident field and source point")


@dataclass(frozen=True)
class KernelValue:
    value: float
    method: str
    est_error: float


def _theta_integral(r, z, rp, zp, power, weight="cos", tol=1e-13):
    """int_0^pi w(t) D^-power dt folded onto [0, pi/2] without cancellation."""
    dz2 = (z - zp) ** 2
    base = r * r + rp * rp + dz2
    b = 2.0 * r * rp

    if power == 0.5 and weight == "cos":
        def f(t):
            c = np.cos(t)
            dm = base - b * c
            dp = base + b * c
            sm, sp = np.sqrt(dm), np.sqrt(dp)
            return c * (2.0 * b * c) / (sm * sp * (sm + sp))
    else:
        def f(t):
            c = np.cos(t)
            w = c if weight == "cos" else c * c
            sgn = -1.0 if weight == "cos" else 1.0
            return w * ((base - b * c) ** -power + sgn * (base + b * c) ** -power)

    val, err = integrate.quad(f, 0.0, 0.5 * np.pi, epsabs=0.0, epsrel=tol, limit=400)
    return val, err


def kernel3d(r, z, rp, zp, method="elliptic", tol=1e-12):
    """Axisymmetric ring Green's function as a :class:`KernelValue`."""
    _check_ring_args(r, z, rp, zp)
    if r == 0.0 or rp == 0.0:
        return KernelValue(0.0, method, 0.0)
    if method == "elliptic":
        G, _, _ = ring_kernels(r, z, rp, zp)
        g = float(G)
        return KernelValue(g, "elliptic", 4e-16 * abs(g) * 10)
    if method in ("quadrature", "adaptive-quadrature"):
        val, err = _theta_integral(r, z, rp, zp, 0.5, tol=tol)
        pref = r * rp / TWO_PI
        return KernelValue(pref * val, "adaptive-quadrature", pref * err)
    raise ValueError(f"unknown kernel method {method!r}")


def kernel3d_dz(r, z, rp, zp, method="elliptic"):
    """dG/dz; odd in z - z'."""
    _check_ring_args(r, z, rp, zp)
    if r == 0.0 or rp == 0.0 or z == zp:
        return 0.0
    if method == "elliptic":
        return float(ring_kernels(r, z, rp, zp)[1])
    val, _ = _theta_integral(r, z, rp, zp, 1.5)
    return -(z - zp) * r * rp / TWO_PI * val


def kernel3d_dr(r, z, rp, zp, method="elliptic"):
    """dG/dr (first slot)."""
    _check_ring_args(r, z, rp, zp)
    if r <= 0.0:
        raise ValueError("kernel3d_dr needs r > 0")
    if rp == 0.0:
        return 0.0
    if method == "elliptic":
        return float(r * ring_kernels(r, z, rp, zp)[2])
    # dG/dr = r'/(2 pi) int cos t (r'^2 - r r' cos t + dz^2) D^-3/2 dt
    dz2 = (z - zp) ** 2
    v1, _ = _theta_integral(r, z, rp, zp, 1.5, "cos")
    v2, _ = _theta_integral(r, z, rp, zp, 1.5, "cos2")
    return rp / TWO_PI * ((rp * rp + dz2) * v1 - r * rp * v2)


def axis_speed_kernel(z, rp, zp):
    """Limit of (dG/dr)/r as r -> 0: r'^2 / (2 (r'^2 + (z - z')^2)^{3/2})."""
    return 0.5 * rp**2 / (rp**2 + (z - zp) ** 2) ** 1.5


def dipole_kernels(x1, x2, y1, y2):
    """Odd-image log kernel and its gradient.

    Returns ``(G, dG_dx1, dG_dx2)`` with
    G = (log|x - y*| - log|x - y|) / (2 pi),  y* = (y1, -y2).
    """
    d1 = x1 - y1
    dm2 = d1**2 + (x2 - y2) ** 2
    dp2 = d1**2 + (x2 + y2) ** 2
    G = np.log1p(4.0 * x2 * y2 / dm2) / (2.0 * TWO_PI)
    dG1 = -d1 * 4.0 * x2 * y2 / (TWO_PI * dm2 * dp2)
    dG2 = ((x2 + y2) / dp2 - (x2 - y2) / dm2) / TWO_PI
    return G, dG1, dG2


def kernel2d(x, y):
    """Scalar odd-image kernel; ``y`` must lie in the open upper half-plane."""
    x1, x2 = map(float, x)
    y1, y2 = map(float, y)
    if np.isnan([x1, x2, y1, y2]).any():
        raise ValueError("NaN kernel argument")
    if y2 <= 0.0:
        raise ValueError("source point must satisfy y2 > 0")
    if (x1 == y1 and x2 == y2) or (x1 == y1 and x2 == -y2):
        raise KernelSingularity("kernel singularity: coincident field and source point")
    return float(dipole_kernels(x1, x2, y1, y2)[0])
