"""Vortex domain as a superlevel set of the relative stream function.

Axis conventions: the symmetry axis scanned here is the line a = 0, i.e.
the r-axis through z = 0 for rings and the x2-axis for dipoles.  Along it
``s`` denotes r (rings) or x2 (dipoles).  The boundary curve is
|a| < l(s) for s in (L, R).
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import roots_jacobi
from scipy.spatial import cKDTree

from .field import DIPOLE, RING, TravelingVortex, VorticitySpec
from .stream import StreamSolver

OVAL = "Oval2D"
SPHEROID = "Spheroid"
LEMNISCATE = "Lemniscate"
TOROID = "Toroid"

LEMNISCATE_BAND = 1e-3  # relative to W


class DomainError(RuntimeError):
    """Numerical failure during extraction; ``stage`` names the operation."""

    stage = "domain"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CoreNotSimplyConnected(DomainError):
    stage = "core_axis_interval"


class InconsistentClassification(DomainError):
    stage = "find_inner_radius"


class OuterRadiusEscape(DomainError):
    stage = "find_level_and_outer_radius"


class SteinerViolation(DomainError):
    stage = "boundary_curve"


class MeasureInconsistency(DomainError):
    stage = "measures"


def _bisect_edge(f, lo, hi, tol):
    """Boundary of {f true} between lo (false side) and hi (true side)."""
    f_lo = f(lo)
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def core_axis_interval(spec: VorticitySpec, n=4001, tol=1e-8):
    """(R1, R2): the positive-vorticity interval on the symmetry axis a = 0."""
    _, _, _, b1 = spec.bbox()
    top = 1.05 * b1
    s = np.linspace(0.0, top, n)
    s[0] = 1e-12 * top
    pos = spec.values(np.zeros_like(s), s) > 0.0
    edges = np.diff(pos.astype(int))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1)
    if pos[0]:
        starts = np.r_[0, starts]
    if pos[-1]:
        ends = np.r_[ends, n - 1]
    if starts.size != 1:
        raise CoreNotSimplyConnected(
            f"core not simply connected on axis: {starts.size} positive intervals",
            {"intervals": int(starts.size)})
    i, j = int(starts[0]), int(ends[0])
    positive = lambda x: bool(spec.values(0.0, x) > 0.0)
    R1 = 0.0 if i == 0 else _bisect_edge(positive, s[i - 1], s[i], tol)
    R2 = _bisect_edge(positive, s[j + 1], s[j], tol) if j + 1 < n else top
    return float(R1), float(R2)


@dataclass
class Classification:
    case: str
    topology: str
    center_speed: float
    speed: float
    band: float
    assumptions_verified: bool = True
    notes: list = field(default_factory=list)


def classify(tv: TravelingVortex, solver=None, steiner=None, residual=None,
             residual_threshold=0.05, band=LEMNISCATE_BAND):
    """Case I / II and topology from the center speed versus W.

    ``steiner`` (a SteinerReport) and ``residual`` are optional precondition
    results; failing ones are recorded, the classification is still emitted.
    """
    solver = solver or StreamSolver(tv)
    cs = solver.center_speed()
    W = tv.speed
    eps = band * W
    notes = []
    ok = True
    if steiner is not None and not steiner.is_symmetric:
        ok = False
        notes.append(f"Steiner check failed (violation {steiner.max_violation:.3e})")
    if residual is not None and residual > residual_threshold:
        ok = False
        notes.append(f"steadiness residual {residual:.3e} above {residual_threshold}")
    if tv.geometry == DIPOLE:
        return Classification("I", OVAL, cs, W, eps, ok, notes)
    if cs > W + eps:
        return Classification("I", SPHEROID, cs, W, eps, ok, notes)
    if cs >= W - eps:
        return Classification("I", LEMNISCATE, cs, W, eps, ok, notes)
    return Classification("II", TOROID, cs, W, eps, ok, notes)


def find_inner_radius(tv, R1, solver=None, n_scan=64, xtol=1e-10):
    """L: first root of v^z(0, r) = W on (0, R1] (Case II)."""
    solver = solver or StreamSolver(tv)
    W = tv.speed
    s = np.linspace(0.0, R1, n_scan + 1)
    _, vz = solver.transverse_profile(s)
    vz[0] = solver.center_speed()
    diff = vz - W
    idx = np.flatnonzero((diff[:-1] < 0) & (diff[1:] >= 0))
    if diff[0] >= 0 or idx.size == 0:
        raise InconsistentClassification(
            "no sign change of v^z(0, r) - W on (0, R1]",
            {"s": s.tolist(), "v_z": vz.tolist(), "W": W})
    k = int(idx[0])
    g = lambda x: float(solver.transverse_profile(np.array([x]))[1][0]) - W
    return float(brentq(g, s[k], s[k + 1], xtol=xtol, rtol=1e-15))


def find_level_and_outer_radius(tv, core, L=None, solver=None, escape_factor=10.0, xtol=1e-10):
    """(gamma, R): gamma = 0 (Case I) or phi(0, L) (Case II); R the axis root of phi = gamma beyond the core."""
    solver = solver or StreamSolver(tv)
    R1, R2 = core
    if L is None:
        gamma = 0.0
    else:
        gamma = float(solver.transverse_profile(np.array([L]))[0][0])
    limit = escape_factor * tv.vorticity.support_radius
    h = max(R2 - R1, 1e-3 * R2) / 32.0
    start = 0.5 * (R1 + R2)
    s_prev = start
    f_prev = float(solver.transverse_profile(np.array([start]))[0][0]) - gamma
    if f_prev <= 0.0:
        raise OuterRadiusEscape("relative stream at the core centre is not above the level",
                                {"s": start, "phi_minus_gamma": f_prev})
    # march outward in growing batches until phi drops below the level
    step = h
    s_cur = start
    while s_cur < limit:
        batch = s_cur + step * np.cumsum(1.2 ** np.arange(16))
        s_cur = float(batch[-1])
        step *= 1.2**16
        vals = solver.transverse_profile(batch)[0] - gamma
        neg = np.flatnonzero(vals <= 0.0)
        if neg.size:
            j = int(neg[0])
            lo = batch[j - 1] if j > 0 else s_prev
            hi = batch[j]
            g = lambda x: float(solver.transverse_profile(np.array([x]))[0][0]) - gamma
            R = float(brentq(g, lo, hi, xtol=xtol, rtol=1e-15))
            return gamma, R
        s_prev = s_cur
    raise OuterRadiusEscape(f"outer radius escape: no root within {limit:g}", {"limit": limit})


def _axis_stagnation(tv, solver, zmax):
    """Root of the on-axis speed minus W along the line s = 0 (a >= 0)."""
    W = tv.speed
    if solver.is_ring:
        f = lambda z: float(solver.axis_speed(np.array([z]))[0]) - W
    else:
        f = lambda z: float(solver.velocity(np.array([z]), np.array([0.0]))[0][0]) - W
    if f(0.0) <= 0.0:
        return 0.0
    hi = zmax
    for _ in range(8):
        if f(hi) < 0.0:
            return float(brentq(f, 0.0, hi, xtol=1e-12))
        hi *= 2.0
    return float("nan")


@dataclass
class BoundaryCurve:
    s: np.ndarray
    l: np.ndarray
    gamma: float
    l0: float | None = None
    l0_richardson: float | None = None
    residual: float = 0.0


def chebyshev_nodes(lo, hi, n):
    k = np.arange(1, n + 1)
    return 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos((2 * k - 1) * np.pi / (2 * n))


def boundary_curve(tv, gamma, L, R, n_samples=128, solver=None, lemniscate=False,
                   xtol=1e-11, max_iter=80):
    """Solve phi(l(s), s) = gamma on Chebyshev nodes of (L, R) by safeguarded Newton.

    Strict Steiner symmetry makes phi(., s) strictly decreasing in |a|, so the
    root in [0, z_max] is unique.  Endpoints are appended: l(L) = l(R) = 0 in
    Case II; in Case I the axis value l(0) is the stagnation point where the
    axial speed equals W, cross-checked by Richardson extrapolation.
    """
    solver = solver or StreamSolver(tv)
    spec = tv.vorticity
    a0, a1, _, _ = spec.bbox()
    scale = spec.support_radius
    s = chebyshev_nodes(L, R, n_samples)
    phi0 = solver.relative_stream(np.zeros_like(s), s) - gamma
    tol_phi = 1e-8 * max(tv.speed * scale * (scale if solver.is_ring else 1.0), 1e-300)
    if np.any(phi0 < -tol_phi) and not lemniscate:
        bad = s[phi0 < -tol_phi]
        raise SteinerViolation(f"Steiner violation at s={bad[0]:.6g}: axis value below the level",
                               {"s": bad.tolist()})
    live = phi0 > 0.0
    lo = np.zeros_like(s)
    zmax = 3.0 * max(abs(a0), abs(a1))
    hi = np.full_like(s, zmax)
    fhi = solver.relative_stream(hi, s) - gamma
    for _ in range(5):
        need = live & (fhi >= 0.0)
        if not np.any(need):
            break
        hi[need] *= 2.0
        fhi[need] = solver.relative_stream(hi[need], s[need]) - gamma
    if np.any(live & (fhi >= 0.0)):
        bad = s[live & (fhi >= 0.0)]
        raise SteinerViolation(f"no boundary root below z_max at s={bad[0]:.6g}", {"s": bad.tolist()})

    z = np.where(live, 0.5 * hi, 0.0)
    active = live.copy()
    for _ in range(max_iter):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        psi, d1, _ = solver.raw(z[idx], s[idx])
        f = solver.relative_from_stream(psi, s[idx]) - gamma
        pos = f > 0
        lo[idx[pos]] = z[idx[pos]]
        hi[idx[~pos]] = z[idx[~pos]]
        with np.errstate(divide="ignore", invalid="ignore"):
            znew = z[idx] - f / d1
        inside = np.isfinite(znew) & (znew > lo[idx]) & (znew < hi[idx])
        znew = np.where(inside, znew, 0.5 * (lo[idx] + hi[idx]))
        step = np.abs(znew - z[idx])
        z[idx] = znew
        done = (step < xtol * scale) | (hi[idx] - lo[idx] < xtol * scale)
        active[idx[done]] = False
    l_vals = np.where(live, z, 0.0)
    psi = solver.stream(l_vals, s)
    resid = float(np.max(np.abs(solver.relative_from_stream(psi, s)[live] - gamma))) if np.any(live) else 0.0

    if L > 0.0:
        s_out = np.r_[L, s, R]
        l_out = np.r_[0.0, l_vals, 0.0]
        return BoundaryCurve(s_out, l_out, gamma, residual=resid)
    # Case I: extrapolate to the axis and compare with the stagnation point
    m = min(6, s.size)
    coef = np.polyfit(s[:m] ** 2, l_vals[:m], 2)
    l0_rich = float(max(np.polyval(coef, 0.0), 0.0))
    l0 = 0.0 if lemniscate else _axis_stagnation(tv, solver, zmax)
    if not np.isfinite(l0):
        l0 = l0_rich
    s_out = np.r_[0.0, s, R]
    l_out = np.r_[l0, l_vals, 0.0]
    return BoundaryCurve(s_out, l_out, gamma, l0=l0, l0_richardson=l0_rich, residual=resid)


def core_measure(spec: VorticitySpec, n_panels=32, order=8):
    """Area (dipole, both halves) or volume (ring) of the support, by indicator quadrature."""
    gx, gw = np.polynomial.legendre.leggauss(order)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    total = 0.0
    for reg in spec.regions():
        A0, A1, B0, B1 = reg.param_bounds()
        ea = np.linspace(A0, A1, n_panels + 1)
        eb = np.linspace(B0, B1, n_panels + 1)
        u = (ea[:-1, None] + np.diff(ea)[:, None] * gx).ravel()
        wu = (np.diff(ea)[:, None] * gw).ravel()
        v = (eb[:-1, None] + np.diff(eb)[:, None] * gx).ravel()
        wv = (np.diff(eb)[:, None] * gw).ravel()
        U, V = np.meshgrid(u, v, indexing="ij")
        p0, p1, jac = reg.to_physical(U, V)
        ind = (spec.values(p0, p1) > 0.0) & (p1 >= 0.0)
        w = np.outer(wu, wv) * jac
        if spec.geometry == RING:
            total += float(np.sum(w * ind * 2.0 * np.pi * p1))
        else:
            total += float(np.sum(w * ind)) * 2.0
    return total


def domain_measure(curve: BoundaryCurve, geometry):
    """Area (dipole, both halves) or volume (ring) enclosed by the boundary.

    l has square-root ends where it vanishes (at R, and at L in Case II), so
    l = sqrt(w) h with w the matching Jacobi weight and h smooth.  h is
    interpolated on the Chebyshev nodes of the curve and integrated by
    Gauss-Jacobi quadrature, which converges spectrally.
    """
    lo, hi = float(curve.s[0]), float(curve.s[-1])
    s, l = curve.s[1:-1], curve.l[1:-1]
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    x = (s - mid) / half
    beta = 0.5 if lo > 0.0 else 0.0
    h = l / np.sqrt((1.0 - x) * (1.0 + x) ** (2 * beta))
    smooth = Chebyshev.fit(x, h, s.size - 1, domain=[-1.0, 1.0])
    xg, wg = roots_jacobi(s.size, 0.5, beta)
    sg = mid + half * xg
    lg = smooth(xg)
    if geometry == RING:
        return float(half * np.sum(wg * 2.0 * np.pi * sg * 2.0 * lg))
    return float(half * 2.0 * np.sum(wg * 2.0 * lg))


@dataclass
class Measures:
    core: float
    domain: float
    atmosphere: float
    ratio: float


def measures(tv, curve: BoundaryCurve, core=None, tol=1e-3):
    core = core_measure(tv.vorticity) if core is None else core
    dom = domain_measure(curve, tv.geometry)
    atm = dom - core
    if atm < -tol * core:
        raise MeasureInconsistency(f"negative atmosphere {atm:.3e} (core {core:.3e})",
                                   {"core": core, "domain": dom})
    atm = max(atm, 0.0)
    return Measures(core, dom, atm, atm / core)


def sadovskii_test(R1, ratio, threshold=0.01):
    """Empty atmosphere together with a core reaching the axis."""
    return bool(R1 == 0.0 and ratio < threshold)


@dataclass
class DomainResult:
    topology: str
    case: str
    gamma: float
    inner_radius: float
    outer_radius: float
    core_interval: tuple
    center_speed: float
    speed: float
    boundary_s: np.ndarray
    boundary_l: np.ndarray
    core_measure: float
    domain_measure: float
    atmosphere_measure: float
    atmosphere_ratio: float
    sadovskii: bool | None
    l0: float | None = None
    l0_richardson: float | None = None
    boundary_residual: float = 0.0
    assumptions_verified: bool = True
    notes: list = field(default_factory=list)

    @property
    def geometry(self):
        return DIPOLE if self.topology == OVAL else RING

    def to_dict(self):
        d = asdict(self)
        d["boundary"] = [[float(a), float(b)] for a, b in zip(self.boundary_s, self.boundary_l)]
        del d["boundary_s"], d["boundary_l"]
        d["core_interval"] = [float(x) for x in self.core_interval]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_boundary_csv(self, path):
        labels = ("r", "l") if self.topology != OVAL else ("x2", "l")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(labels)
            for a, b in zip(self.boundary_s, self.boundary_l):
                w.writerow([repr(float(a)), repr(float(b))])

    def _l2_spline(self):
        # l^2 is smooth in s up to both endpoints, where l itself has square-root ends
        if getattr(self, "_spline", None) is None:
            self._spline = CubicSpline(self.boundary_s, self.boundary_l**2)
        return self._spline

    def boundary_at(self, s):
        """Interpolated half-width l(s), zero outside (L, R)."""
        s = np.abs(np.asarray(s, float))
        inside = (s >= self.boundary_s[0]) & (s <= self.boundary_s[-1])
        l2 = np.clip(self._l2_spline()(np.clip(s, self.boundary_s[0], self.boundary_s[-1])), 0.0, None)
        return np.where(inside, np.sqrt(l2), 0.0)

    def contains(self, a, b):
        """Membership |a| < l(|b|) for the extracted domain."""
        a = np.abs(np.asarray(a, float))
        b = np.abs(np.asarray(b, float))
        inside_s = (b > self.boundary_s[0]) & (b < self.boundary_s[-1])
        if self.inner_radius == 0.0:
            inside_s = b < self.boundary_s[-1]
        return inside_s & (a < self.boundary_at(b))

    def boundary_polyline(self, n=20001):
        """Dense closed boundary of the domain within the closed upper half-plane.

        In Case I the axis segment |a| <= l(0), b = 0 lies on the level set
        phi = gamma = 0 and closes the curve.
        """
        s0, s1 = self.boundary_s[0], self.boundary_s[-1]
        t = np.linspace(0.0, np.pi, n)
        s = 0.5 * (s0 + s1) - 0.5 * (s1 - s0) * np.cos(t)
        l = self.boundary_at(s)
        a = np.r_[l, -l[::-1]]
        b = np.r_[s, s[::-1]]
        if self.inner_radius == 0.0 and l[0] > 0.0:
            seg = np.linspace(-l[0], l[0], n)
            a, b = np.r_[a, seg], np.r_[b, np.zeros(n)]
        return a, b

    def distance_to_boundary(self, a, b, n=20001):
        if getattr(self, "_tree", None) is None:
            self._tree = cKDTree(np.column_stack(self.boundary_polyline(n)))
        d, _ = self._tree.query(np.column_stack([np.ravel(a), np.ravel(b)]))
        return d.reshape(np.shape(a))


def extract_domain(tv: TravelingVortex, solver=None, n_samples=128, steiner=None, residual=None,
                   root_tol=1e-10):
    """Full extraction: core interval, classification, level, boundary and measures.

    ``root_tol`` is the relative (to the support radius) tolerance of the radius
    roots; boundary abscissae are solved ten times tighter.
    """
    solver = solver or StreamSolver(tv)
    xtol = root_tol * tv.vorticity.support_radius
    core = core_axis_interval(tv.vorticity)
    cls = classify(tv, solver, steiner=steiner, residual=residual)
    L = None
    if cls.case == "II":
        L = find_inner_radius(tv, core[0], solver, xtol=xtol)
    gamma, R = find_level_and_outer_radius(tv, core, L, solver, xtol=xtol)
    notes = list(cls.notes)
    if R < core[1] - 1e-6 * tv.vorticity.support_radius:
        notes.append(f"outer radius {R:.6g} below core edge {core[1]:.6g}")
    curve = boundary_curve(tv, gamma, L or 0.0, R, n_samples, solver,
                           lemniscate=cls.topology == LEMNISCATE, xtol=0.1 * root_tol)
    meas = measures(tv, curve)
    sad = sadovskii_test(core[0], meas.ratio) if tv.geometry == DIPOLE else None
    return DomainResult(
        topology=cls.topology, case=cls.case, gamma=gamma, inner_radius=L or 0.0,
        outer_radius=R, core_interval=core, center_speed=cls.center_speed, speed=tv.speed,
        boundary_s=curve.s, boundary_l=curve.l, core_measure=meas.core,
        domain_measure=meas.domain, atmosphere_measure=meas.atmosphere,
        atmosphere_ratio=meas.ratio, sadovskii=sad, l0=curve.l0,
        l0_richardson=curve.l0_richardson, boundary_residual=curve.residual,
        assumptions_verified=cls.assumptions_verified, notes=notes)
