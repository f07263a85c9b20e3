"""Vorticity primitives, their symmetry checks, and traveling-speed pairing.

Points are written ``(a, b)``: ``(z, r)`` for rings and ``(x1, x2)`` for
dipoles.  Ring profiles give the relative vorticity xi = omega / r on r >= 0;
dipole profiles give omega on x2 >= 0 and are odd-reflected below the axis.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar
from scipy.special import erf, j0, j1, jn_zeros

from .quadrature import PolarRegion, RectRegion

RING = "ring"
DIPOLE = "dipole"
GEOMETRIES = (RING, DIPOLE)

# Gaussian tails are cut where they drop below this fraction of the peak
SUPPORT_CUTOFF = 1e-14
GAUSS_CUT = math.sqrt(2.0 * math.log(1.0 / SUPPORT_CUTOFF))

LAMB_KA = float(jn_zeros(1, 1)[0])


class SpecError(ValueError):
    """Invalid vorticity specification."""


def _positive(name, value):
    v = float(value)
    if not np.isfinite(v):
        raise SpecError(f"{name} must be finite, got {value!r}")
    if v <= 0.0:
        raise SpecError(f"{name} must be positive, got {value!r}")
    return v


@dataclass(frozen=True)
class JumpBoundary:
    """Samples of a vorticity discontinuity: points, outward normals, jump, arc weights."""

    a: np.ndarray
    b: np.ndarray
    na: np.ndarray
    nb: np.ndarray
    jump: np.ndarray
    weight: np.ndarray


class VorticitySpec:
    """Common interface of every vorticity primitive."""

    kind: ClassVar[str] = ""
    geometry: str = RING

    def values(self, a, b):
        """Vectorised profile on the closed upper half-plane b >= 0."""
        raise NotImplementedError

    def bbox(self):
        """(a0, a1, b0, b1) containing the support within b >= 0."""
        raise NotImplementedError

    def regions(self):
        raise NotImplementedError

    def jump_boundary(self, n=256):
        return None

    def scaled(self, factor):
        raise NotImplementedError

    @property
    def support_radius(self):
        a0, a1, b0, b1 = self.bbox()
        return float(max(abs(a0), abs(a1), abs(b0), abs(b1)))

    @property
    def steiner_primitive(self):
        return True

    def to_dict(self):
        raise NotImplementedError

    def density(self, a, b):
        """Quadrature density: xi * r' for rings, omega for dipoles."""
        v = self.values(a, b)
        return v * b if self.geometry == RING else v

    def _check_geometry(self):
        if self.geometry not in GEOMETRIES:
            raise SpecError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")


@dataclass(frozen=True)
class HillBall(VorticitySpec):
    """Uniform relative vorticity A inside the ball |x| < a."""

    amplitude: float = 1.0
    radius: float = 1.0
    geometry: str = RING
    kind: ClassVar[str] = "HillBall"

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _positive("amplitude", self.amplitude))
        object.__setattr__(self, "radius", _positive("radius", self.radius))
        if self.geometry != RING:
            raise SpecError("HillBall is a ring (axisymmetric) profile")

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        return np.where(a * a + b * b < self.radius**2, self.amplitude, 0.0)

    def bbox(self):
        return (-self.radius, self.radius, 0.0, self.radius)

    def regions(self):
        return [PolarRegion(0.0, 0.0, self.radius, 0.0, np.pi)]

    def jump_boundary(self, n=256):
        t, w = np.polynomial.legendre.leggauss(n)
        th = 0.5 * np.pi * (t + 1.0)
        c, s = np.cos(th), np.sin(th)
        return JumpBoundary(self.radius * c, self.radius * s, c, s,
                            np.full(n, -self.amplitude), 0.5 * np.pi * self.radius * w)

    def scaled(self, factor):
        return replace(self, amplitude=self.amplitude * factor)

    def natural_speed(self):
        """Classical traveling speed 2 A a^2 / 15."""
        return 2.0 * self.amplitude * self.radius**2 / 15.0

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "radius": self.radius,
                "geometry": self.geometry}


@dataclass(frozen=True)
class LambDipole(VorticitySpec):
    """Chaplygin-Lamb dipole of radius a moving with speed W."""

    radius: float = 1.0
    speed: float = 1.0
    geometry: str = DIPOLE
    kind: ClassVar[str] = "LambDipole"

    def __post_init__(self):
        object.__setattr__(self, "radius", _positive("radius", self.radius))
        object.__setattr__(self, "speed", _positive("speed", self.speed))
        if self.geometry != DIPOLE:
            raise SpecError("LambDipole is a planar dipole profile")

    @property
    def wavenumber(self):
        return LAMB_KA / self.radius

    @property
    def coefficient(self):
        """B in the interior stream B J1(k rho) sin(theta) of the relative flow."""
        return -2.0 * self.speed / (self.wavenumber * j0(LAMB_KA))

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        rho = np.hypot(a, b)
        k = self.wavenumber
        with np.errstate(invalid="ignore", divide="ignore"):
            sin_t = np.where(rho > 0, b / np.where(rho > 0, rho, 1.0), 0.0)
        inside = rho < self.radius
        return np.where(inside, k * k * self.coefficient * j1(k * rho) * sin_t, 0.0)

    def bbox(self):
        return (-self.radius, self.radius, 0.0, self.radius)

    def regions(self):
        return [PolarRegion(0.0, 0.0, self.radius, 0.0, np.pi, n_rho=4, n_alpha=8)]

    def scaled(self, factor):
        return replace(self, speed=self.speed * factor)

    def natural_speed(self):
        return self.speed

    def exact_stream(self, x1, x2):
        """Closed-form lab-frame stream function (used as a test oracle)."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        rho = np.hypot(x1, x2)
        k, W, a = self.wavenumber, self.speed, self.radius
        with np.errstate(invalid="ignore", divide="ignore"):
            sin_t = np.where(rho > 0, x2 / np.where(rho > 0, rho, 1.0), 0.0)
            outer = W * a * a * x2 / np.where(rho > 0, rho * rho, 1.0)
        inner = W * x2 + self.coefficient * j1(k * rho) * sin_t
        return np.where(rho < a, inner, outer)

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "speed": self.speed,
                "geometry": self.geometry}


@dataclass(frozen=True)
class PatchPair(VorticitySpec):
    """Odd pair of uniform disks of radius eps centred at (0, +-d)."""

    strength: float = 1.0
    center_offset: float = 1.0
    patch_radius: float = 0.1
    geometry: str = DIPOLE
    kind: ClassVar[str] = "PatchPair"

    def __post_init__(self):
        for name in ("strength", "center_offset", "patch_radius"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        if self.patch_radius > self.center_offset:
            raise SpecError("patch_radius must not exceed center_offset (patches would cross the axis)")
        if self.geometry != DIPOLE:
            raise SpecError("PatchPair is a planar dipole profile")

    @classmethod
    def from_circulation(cls, circulation, center_offset, patch_radius):
        """Patch of total circulation Gamma (per patch)."""
        strength = _positive("circulation", circulation) / (np.pi * patch_radius**2)
        return cls(strength, center_offset, patch_radius)

    @property
    def circulation(self):
        return self.strength * np.pi * self.patch_radius**2

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        inside = a * a + (b - self.center_offset) ** 2 < self.patch_radius**2
        return np.where(inside, self.strength, 0.0)

    def bbox(self):
        e, d = self.patch_radius, self.center_offset
        return (-e, e, d - e, d + e)

    def regions(self):
        return [PolarRegion(0.0, self.center_offset, self.patch_radius)]

    def jump_boundary(self, n=256):
        th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        c, s = np.cos(th), np.sin(th)
        e = self.patch_radius
        return JumpBoundary(e * c, self.center_offset + e * s, c, s,
                            np.full(n, -self.strength), np.full(n, 2.0 * np.pi * e / n))

    def scaled(self, factor):
        return replace(self, strength=self.strength * factor)

    def natural_speed(self):
        """Point-vortex pair speed Gamma / (4 pi d)."""
        return self.circulation / (4.0 * np.pi * self.center_offset)

    def to_dict(self):
        return {"kind": self.kind, "strength": self.strength, "center_offset": self.center_offset,
                "patch_radius": self.patch_radius, "geometry": self.geometry}


def _gauss_regions(center, cut):
    # square panels of width about 2 sigma; the cutoff jump (1e-14 of the peak)
    # at the disk edge is below quadrature accuracy
    lo = max(center - cut, 0.0)
    nb = max(2, int(np.ceil(8 * (center + cut - lo) / (2 * cut))))
    return [RectRegion(-cut, cut, lo, center + cut, n_a=8, n_b=nb)]


@dataclass(frozen=True)
class GaussianRing(VorticitySpec):
    """Gaussian relative vorticity about the circle r = R0, z = 0, normalised to circulation Gamma.

    The profile is cut to zero where it falls below ``SUPPORT_CUTOFF`` times
    its peak, i.e. outside the disk of radius ``GAUSS_CUT * sigma``.
    """

    circulation: float = 1.0
    ring_radius: float = 1.0
    core_width: float = 0.1
    geometry: str = RING
    kind: ClassVar[str] = "GaussianRing"

    def __post_init__(self):
        for name in ("circulation", "ring_radius", "core_width"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        if self.geometry != RING:
            raise SpecError("GaussianRing is a ring (axisymmetric) profile")

    @property
    def cut_radius(self):
        return GAUSS_CUT * self.core_width

    @property
    def peak(self):
        s, R = self.core_width, self.ring_radius
        # int_{r>0} r exp(-(r-R)^2 / 2s^2) dr, times the z-integral s sqrt(2 pi)
        radial = s * s * np.exp(-R * R / (2 * s * s)) + R * s * np.sqrt(np.pi / 2) * (1 + erf(R / (np.sqrt(2) * s)))
        return self.circulation / (radial * s * np.sqrt(2 * np.pi))

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        q = (a * a + (b - self.ring_radius) ** 2) / (2.0 * self.core_width**2)
        return np.where((q < 0.5 * GAUSS_CUT**2) & (b >= 0.0), self.peak * np.exp(-np.minimum(q, 700.0)), 0.0)

    def bbox(self):
        c = self.cut_radius
        return (-c, c, max(0.0, self.ring_radius - c), self.ring_radius + c)

    def regions(self):
        return _gauss_regions(self.ring_radius, self.cut_radius)

    def scaled(self, factor):
        return replace(self, circulation=self.circulation * factor)

    def to_dict(self):
        return {"kind": self.kind, "circulation": self.circulation, "ring_radius": self.ring_radius,
                "core_width": self.core_width, "geometry": self.geometry}


@dataclass(frozen=True)
class GaussianPair(VorticitySpec):
    """Odd pair of Gaussian vortices at (0, +-d), each of circulation Gamma."""

    circulation: float = 1.0
    offset: float = 1.0
    core_width: float = 0.1
    geometry: str = DIPOLE
    kind: ClassVar[str] = "GaussianPair"

    def __post_init__(self):
        for name in ("circulation", "offset", "core_width"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))
        if self.geometry != DIPOLE:
            raise SpecError("GaussianPair is a planar dipole profile")

    @property
    def cut_radius(self):
        return GAUSS_CUT * self.core_width

    @property
    def peak(self):
        s, d = self.core_width, self.offset
        upper = s * np.sqrt(np.pi / 2) * (1 + erf(d / (np.sqrt(2) * s)))
        return self.circulation / (upper * s * np.sqrt(2 * np.pi))

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        q = (a * a + (b - self.offset) ** 2) / (2.0 * self.core_width**2)
        return np.where((q < 0.5 * GAUSS_CUT**2) & (b >= 0.0), self.peak * np.exp(-np.minimum(q, 700.0)), 0.0)

    def bbox(self):
        c = self.cut_radius
        return (-c, c, max(0.0, self.offset - c), self.offset + c)

    def regions(self):
        return _gauss_regions(self.offset, self.cut_radius)

    def scaled(self, factor):
        return replace(self, circulation=self.circulation * factor)

    def to_dict(self):
        return {"kind": self.kind, "circulation": self.circulation, "offset": self.offset,
                "core_width": self.core_width, "geometry": self.geometry}


@dataclass(frozen=True, eq=False)
class Gridded(VorticitySpec):
    """Bilinear interpolation of samples on a rectangular (a, b) grid with b >= 0."""

    a_grid: np.ndarray = field(default_factory=lambda: np.zeros(2))
    b_grid: np.ndarray = field(default_factory=lambda: np.zeros(2))
    samples: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    geometry: str = RING
    source: str | None = None
    kind: ClassVar[str] = "Gridded"

    def __post_init__(self):
        self._check_geometry()
        a = np.asarray(self.a_grid, float)
        b = np.asarray(self.b_grid, float)
        v = np.asarray(self.samples, float)
        if a.ndim != 1 or b.ndim != 1 or a.size < 2 or b.size < 2:
            raise SpecError("grid axes must be 1D with at least two nodes")
        if np.any(np.diff(a) <= 0) or np.any(np.diff(b) <= 0):
            raise SpecError("grid axes must be strictly increasing")
        if v.shape != (a.size, b.size):
            raise SpecError(f"samples shape {v.shape} does not match grid {(a.size, b.size)}")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise SpecError("grid contains NaN or inf")
        if b[0] < 0.0:
            raise SpecError("grid must lie in the closed upper half-plane")
        if np.any(v < 0.0):
            raise SpecError("vorticity samples must be non-negative in the upper half-plane")
        object.__setattr__(self, "a_grid", a)
        object.__setattr__(self, "b_grid", b)
        object.__setattr__(self, "samples", v)
        object.__setattr__(self, "_interp", RegularGridInterpolator((a, b), v, method="linear",
                                                                    bounds_error=False, fill_value=0.0))

    @classmethod
    def from_function(cls, fn, a_grid, b_grid, geometry=RING):
        A, B = np.meshgrid(a_grid, b_grid, indexing="ij")
        return cls(np.asarray(a_grid, float), np.asarray(b_grid, float), np.asarray(fn(A, B), float), geometry)

    @classmethod
    def from_csv(cls, path, geometry=RING):
        """Read (a, b, value) triples with a header row; the triples must fill a rectangular grid."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = np.array([[float(x) for x in row[:3]] for row in reader if row])
        a = np.unique(rows[:, 0])
        b = np.unique(rows[:, 1])
        if rows.shape[0] != a.size * b.size:
            raise SpecError("CSV triples do not form a full rectangular grid")
        v = np.zeros((a.size, b.size))
        v[np.searchsorted(a, rows[:, 0]), np.searchsorted(b, rows[:, 1])] = rows[:, 2]
        return cls(a, b, v, geometry, source=str(path))

    def to_csv(self, path):
        labels = ("z", "r") if self.geometry == RING else ("x1", "x2")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([*labels, "value"])
            for i, a in enumerate(self.a_grid):
                for j, b in enumerate(self.b_grid):
                    w.writerow([repr(float(a)), repr(float(b)), repr(float(self.samples[i, j]))])

    def inside(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        return ((a >= self.a_grid[0]) & (a <= self.a_grid[-1])
                & (b >= self.b_grid[0]) & (b <= self.b_grid[-1]))

    def values(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        pts = np.stack([a.ravel(), b.ravel()], axis=1)
        return self._interp(pts).reshape(a.shape)

    def bbox(self):
        return (float(self.a_grid[0]), float(self.a_grid[-1]), float(self.b_grid[0]), float(self.b_grid[-1]))

    def regions(self):
        a0, a1, b0, b1 = self.bbox()
        na = int(min(self.a_grid.size - 1, 16))
        nb = int(min(self.b_grid.size - 1, 16))
        return [RectRegion(a0, a1, b0, b1, n_a=max(na, 2), n_b=max(nb, 2))]

    @property
    def steiner_primitive(self):
        return False

    def scaled(self, factor):
        return replace(self, samples=self.samples * factor)

    def to_dict(self):
        d = {"kind": self.kind, "geometry": self.geometry}
        if self.source is not None:
            d["csv"] = self.source
        else:
            d.update(a_grid=self.a_grid.tolist(), b_grid=self.b_grid.tolist(),
                     samples=self.samples.tolist())
        return d


SPEC_KINDS = {cls.kind: cls for cls in (HillBall, LambDipole, PatchPair, GaussianRing, GaussianPair, Gridded)}


def spec_from_dict(doc, base_dir=None):
    """Build a vorticity spec from its JSON document."""
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind not in SPEC_KINDS:
        raise SpecError(f"unknown vorticity kind {kind!r}")
    for k, v in doc.items():
        if isinstance(v, float) and math.isnan(v):
            raise SpecError(f"parameter {k} is NaN")
    if kind == "Gridded":
        geometry = doc.get("geometry", RING)
        if "csv" in doc:
            import os
            path = doc["csv"]
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return Gridded.from_csv(path, geometry)
        return Gridded(np.asarray(doc["a_grid"]), np.asarray(doc["b_grid"]),
                       np.asarray(doc["samples"]), geometry)
    if kind == "PatchPair" and "circulation" in doc:
        geometry = doc.pop("geometry", DIPOLE)
        spec = PatchPair.from_circulation(doc["circulation"], doc["center_offset"], doc["patch_radius"])
        return replace(spec, geometry=geometry)
    return SPEC_KINDS[kind](**doc)


def spec_to_json(spec):
    return json.dumps(spec.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class TravelingVortex:
    """A vorticity profile paired with its (positive) traveling speed W."""

    vorticity: VorticitySpec
    speed: float
    steadiness_residual: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.speed) or self.speed <= 0.0:
            raise SpecError(f"traveling speed must be positive, got {self.speed!r}")

    @property
    def geometry(self):
        return self.vorticity.geometry

    @property
    def is_ring(self):
        return self.vorticity.geometry == RING

    @property
    def scale(self):
        return self.vorticity.support_radius

    def with_speed(self, speed):
        return replace(self, speed=float(speed), steadiness_residual=None)

    def scaled(self, factor):
        """Amplitude and speed scaled together; the relative stream scales by the same factor."""
        return TravelingVortex(self.vorticity.scaled(factor), self.speed * factor)


def evaluate_vorticity(spec: VorticitySpec, point, with_flag=False):
    """Pointwise vorticity: xi for rings, odd-reflected omega for dipoles.

    With ``with_flag`` a pair ``(value, inside_support)`` is returned; the flag
    is False for Gridded queries outside the declared grid.
    """
    a, b = (float(p) for p in point)
    if math.isnan(a) or math.isnan(b):
        raise SpecError("NaN query point")
    if spec.geometry == RING:
        if b < 0.0:
            raise SpecError("ring profiles are defined for r >= 0 only")
        value = float(spec.values(a, b))
        inside = bool(spec.inside(a, b)) if isinstance(spec, Gridded) else True
    else:
        sign = 1.0 if b >= 0.0 else -1.0
        value = sign * float(spec.values(a, abs(b)))
        inside = bool(spec.inside(a, abs(b))) if isinstance(spec, Gridded) else True
        if value == 0.0:
            value = 0.0
    if with_flag:
        return value, inside
    return value


@dataclass(frozen=True)
class SteinerReport:
    is_symmetric: bool
    max_violation: float
    evenness_violation: float
    monotone_violation: float


def check_steiner(spec: VorticitySpec, n_axial=201, n_transverse=101, tol=1e-12):
    """Sample evenness in a and monotone decrease in |a| over the bounding box."""
    a0, a1, b0, b1 = spec.bbox()
    half = max(abs(a0), abs(a1)) * 1.05
    a = np.linspace(0.0, half, n_axial)
    b = np.linspace(b0, b1, n_transverse)
    A, B = np.meshgrid(a, b, indexing="ij")
    plus = spec.values(A, B)
    minus = spec.values(-A, B)
    peak = max(float(np.max(np.abs(plus))), 1e-300)
    even = float(np.max(np.abs(plus - minus)))
    incr = float(max(np.max(np.diff(plus, axis=0)), 0.0))
    worst = max(even, incr)
    return SteinerReport(worst <= tol * peak, worst, even, incr)


def _residual_samples(tv: TravelingVortex, order=6):
    """Sample points and weights on which the transport residual is assembled."""
    spec = tv.vorticity
    jb = spec.jump_boundary()
    if jb is not None:
        # uniform profile: grad xi is a line measure jump * n on the boundary
        keep = jb.b > 1e-9 * spec.support_radius
        a, b = jb.a[keep], jb.b[keep]
        ga, gb = jb.jump[keep] * jb.na[keep], jb.jump[keep] * jb.nb[keep]
        w = jb.weight[keep]
    else:
        gx, gw = np.polynomial.legendre.leggauss(order)
        gx = 0.5 * (gx + 1.0)
        gw = 0.5 * gw
        pts_a, pts_b, wts = [], [], []
        for reg in spec.regions():
            A0, A1, B0, B1 = reg.param_bounds()
            na, nb = 2 * reg.n_a, 2 * reg.n_b
            ea = np.linspace(A0, A1, na + 1)
            eb = np.linspace(B0, B1, nb + 1)
            u = (ea[:-1, None] + np.diff(ea)[:, None] * gx).ravel()
            wu = (np.diff(ea)[:, None] * gw).ravel()
            v = (eb[:-1, None] + np.diff(eb)[:, None] * gx).ravel()
            wv = (np.diff(eb)[:, None] * gw).ravel()
            U, V = np.meshgrid(u, v, indexing="ij")
            p0, p1, jac = reg.to_physical(U, V)
            pts_a.append(p0.ravel())
            pts_b.append(p1.ravel())
            wts.append((np.outer(wu, wv) * jac).ravel())
        a = np.concatenate(pts_a)
        b = np.concatenate(pts_b)
        w = np.concatenate(wts)
        keep = (b > 1e-9 * spec.support_radius) & (spec.values(a, b) > 0)
        a, b, w = a[keep], b[keep], w[keep]
        h = 1e-6 * spec.support_radius
        ga = (spec.values(a + h, b) - spec.values(a - h, b)) / (2 * h)
        gb = (spec.values(a, b + h) - spec.values(a, np.maximum(b - h, 0.0))) / (b + h - np.maximum(b - h, 0.0))
    if tv.is_ring:
        w = w * b
    return a, b, ga, gb, w


@dataclass(frozen=True)
class _ResidualData:
    ua: np.ndarray
    ub: np.ndarray
    ga: np.ndarray
    gb: np.ndarray
    w: np.ndarray

    def residual(self, W):
        ra = self.ua - W
        num = np.sum(self.w * (ra * self.ga + self.ub * self.gb) ** 2)
        den = np.sum(self.w * (ra * ra + self.ub**2) * (self.ga**2 + self.gb**2))
        return float(np.sqrt(num / den)) if den > 0 else 0.0


def _residual_data(tv, solver=None):
    from .stream import StreamSolver

    a, b, ga, gb, w = _residual_samples(tv)
    solver = solver or StreamSolver(tv)
    ua, ub = solver.velocity(a, b)
    return _ResidualData(ua, ub, ga, gb, w)


def steadiness_residual(tv: TravelingVortex, solver=None) -> float:
    """Normalised L2 norm of (v - W e_axial) . grad(xi) over the core.

    The value is |sum w ((v - W e).grad xi)^2|^(1/2) divided by
    |sum w |v - W e|^2 |grad xi|^2|^(1/2), hence in [0, 1] and zero for an
    exact traveling solution.  Uniform profiles use the boundary jump.
    """
    return _residual_data(tv, solver).residual(tv.speed)


def calibrate_speed(spec: VorticitySpec, solver=None, bounds=None):
    """Traveling speed minimising the steadiness residual, and the residual there."""
    from .stream import StreamSolver

    probe = TravelingVortex(spec, 1.0)
    solver = solver or StreamSolver(probe)
    data = _residual_data(probe, solver)
    if bounds is None:
        top = float(np.max(np.abs(data.ua))) if data.ua.size else 1.0
        bounds = (1e-6 * top, 2.0 * top)
    res = minimize_scalar(data.residual, bounds=bounds, method="bounded",
                          options={"xatol": 1e-10 * bounds[1]})
    return float(res.x), float(res.fun)
