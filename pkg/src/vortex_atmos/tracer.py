"""Particle paths in the co-moving frame.

The moving-frame flow is Hamiltonian in canonical coordinates: with
``q = r**2 / 2`` (rings) or ``q = x2`` (dipoles) and the relative stream
function phi,

    da/dt = d phi / dq,    dq/dt = -d phi / da,

so phi is conserved exactly along trajectories and the axis q = 0 is
invariant.  Integration uses the Dormand-Prince 5(4) pair with per-particle
step control, so a whole batch of seeds advances together.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import RectBivariateSpline

from .field import TravelingVortex
from .stream import StreamSolver

BOUNDED = "Bounded"
ESCAPING = "Escaping"
UNDECIDED = "Undecided"

DEFAULT_RTOL = 1e-9
MAX_STEPS = 1_000_000

# Dormand-Prince 5(4) tableau, shared with scipy's RK45
_C = RK45.C
_A = RK45.A
_B = RK45.B
_E = RK45.E


# --------------------------------------------------------------------- fields
class FlowField:
    """Moving-frame flow of a traveling vortex in canonical coordinates (a, q)."""

    def __init__(self, tv: TravelingVortex):
        self.tv = tv
        self.is_ring = tv.is_ring
        self.speed = tv.speed
        self.scale = tv.scale
        self.power = 2 if self.is_ring else 1

    def to_canonical(self, a, b):
        b = np.asarray(b, float)
        return np.asarray(a, float), (0.5 * b * b if self.is_ring else b)

    def to_physical(self, a, q):
        q = np.asarray(q, float)
        return np.asarray(a, float), (np.sqrt(2.0 * np.maximum(q, 0.0)) if self.is_ring else q)

    def evaluate(self, a, q):
        """Return (phi, da/dt, dq/dt) at canonical points."""
        raise NotImplementedError

    def phi(self, a, b):
        """Relative stream function at physical points."""
        ca, cq = self.to_canonical(a, b)
        return self.evaluate(np.atleast_1d(ca), np.atleast_1d(cq))[0]

    def phi_scale(self):
        """Reference magnitude W * scale**p used to normalise phi drift."""
        return self.speed * self.scale**self.power


class QuadratureField(FlowField):
    """Velocities straight from the stream-function quadrature."""

    def __init__(self, tv: TravelingVortex, solver: StreamSolver | None = None):
        super().__init__(tv)
        self.solver = solver or StreamSolver(tv)

    def evaluate(self, a, q):
        a, b = self.to_physical(a, q)
        psi, d1, d2 = self.solver.raw(a, b)
        W = self.speed
        # rings: da/dt = v^z - W, dq/dt = r v^r = -d psi/dz; dipoles: (u1 - W, u2)
        return psi - W * q, d2 - W, -d1


def graded_nodes(lo, hi, bands):
    """Nodes on [lo, hi] with local spacing min{h : (b0, b1, h) in bands, b0 <= x <= b1}."""
    h_default = max(h for _, _, h in bands)
    nodes = [lo]
    x = lo
    while True:
        h = min([hb for b0, b1, hb in bands if b0 <= x <= b1] or [h_default])
        x = x + h
        if x >= hi - 0.5 * h:
            break
        nodes.append(x)
    nodes.append(hi)
    return np.asarray(nodes)


def surrogate_grid(tv: TravelingVortex, box_factor=5.5, h_coarse=0.05, h_fine=0.0125, core_cells=40):
    """Physical node vectors (a, b) for the spline surrogate.

    The box reaches past the escape radius (5 support radii).  Spacing is
    ``h_coarse * R`` in the far field, ``h_fine * R`` around the support and
    ``thickness / core_cells`` across thin cores.
    """
    spec = tv.vorticity
    R = spec.support_radius
    a0, a1, b0, b1 = spec.bbox()
    A = box_factor * R
    B = 2.5 * b1
    th = min(a1 - a0, b1 - b0)
    pad = 0.25 * R
    a_bands = [(-A, A, h_coarse * R), (a0 - pad, a1 + pad, h_fine * R)]
    b_bands = [(0.0, B, h_coarse * R), (max(b0 - pad, 0.0), b1 + pad, h_fine * R)]
    if th < 0.5 * R:
        h_core = th / core_cells
        a_bands.append((a0 - 0.5 * th, a1 + 0.5 * th, h_core))
        b_bands.append((max(b0 - 0.5 * th, 0.0), b1 + 0.5 * th, h_core))
    return graded_nodes(-A, A, a_bands), graded_nodes(0.0, B, b_bands)


class SplineField(FlowField):
    """Quintic tensor spline of the stream function in canonical coordinates.

    The stream function is tabulated once by quadrature on a graded grid; the
    relative term (W q) is added exactly.  Because the interpolant is itself
    a Hamiltonian, its level sets are conserved by the flow it generates.
    Points outside the tabulated box fall back to quadrature.
    """

    def __init__(self, tv: TravelingVortex, solver: StreamSolver | None = None, grid=None):
        super().__init__(tv)
        self.solver = solver or StreamSolver(tv)
        self.fallback = QuadratureField(tv, self.solver)
        a_nodes, b_nodes = grid if grid is not None else surrogate_grid(tv)
        A, Bp = np.meshgrid(a_nodes, b_nodes, indexing="ij")
        psi = self.solver.stream(A.ravel(), Bp.ravel()).reshape(A.shape)
        _, q_nodes = self.to_canonical(a_nodes, b_nodes)
        self.a_nodes, self.q_nodes = a_nodes, q_nodes
        self.spline = RectBivariateSpline(a_nodes, q_nodes, psi, kx=5, ky=5, s=0)
        self.n_nodes = A.size

    def evaluate(self, a, q):
        a = np.asarray(a, float)
        q = np.asarray(q, float)
        W = self.speed
        inside = ((a >= self.a_nodes[0]) & (a <= self.a_nodes[-1])
                  & (q >= self.q_nodes[0] - 1e-12 * self.q_nodes[-1]) & (q <= self.q_nodes[-1]))
        phi = np.empty_like(a)
        fa = np.empty_like(a)
        fq = np.empty_like(a)
        if np.any(inside):
            ai, qi = a[inside], np.maximum(q[inside], 0.0)
            phi[inside] = self.spline.ev(ai, qi) - W * q[inside]
            fa[inside] = self.spline.ev(ai, qi, dy=1) - W
            fq[inside] = -self.spline.ev(ai, qi, dx=1)
        if not np.all(inside):
            out = ~inside
            phi[out], fa[out], fq[out] = self.fallback.evaluate(a[out], q[out])
        return phi, fa, fq


# --------------------------------------------------------------------- traces
@dataclass
class StreamlineTrace:
    seed: tuple
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    phi: np.ndarray
    phi_seed: float
    max_phi_drift: float
    verdict: str
    reason: str
    steps: int
    is_ring: bool
    escape_asymptote: float | None = None
    final_transverse: float | None = None
    period: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def nodes(self):
        return np.column_stack([self.t, self.a, self.b])

    def summary(self):
        return {
            "seed": [float(x) for x in self.seed],
            "verdict": self.verdict,
            "reason": self.reason,
            "phi_seed": float(self.phi_seed),
            "max_phi_drift": float(self.max_phi_drift),
            "escape_asymptote": self.escape_asymptote,
            "final_transverse": self.final_transverse,
            "period": self.period,
            "steps": int(self.steps),
            "n_nodes": int(self.t.size),
        }

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True, indent=2)

    def write_csv(self, path):
        labels = ("t", "z", "r", "phi") if self.is_ring else ("t", "x1", "x2", "phi")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(labels)
            for row in zip(self.t, self.a, self.b, self.phi):
                w.writerow([repr(float(x)) for x in row])


def escape_asymptote(tv: TravelingVortex, level):
    """Transverse position approached by an escaping streamline on phi = level < 0."""
    if level >= 0.0:
        return None
    return float(np.sqrt(-2.0 * level / tv.speed)) if tv.is_ring else float(-level / tv.speed)


def _hermite(y0, y1, f0, f1, h, theta):
    """Cubic Hermite interpolant on a step, theta in [0, 1] (rows are particles)."""
    t = theta[:, None]
    h = h[:, None]
    h00 = 2 * t**3 - 3 * t**2 + 1
    h10 = t**3 - 2 * t**2 + t
    h01 = -2 * t**3 + 3 * t**2
    h11 = t**3 - t**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _hermite_dt(y0, y1, f0, f1, h, theta):
    t = theta[:, None]
    h = h[:, None]
    return ((6 * t**2 - 6 * t) * y0 + (3 * t**2 - 4 * t + 1) * h * f0
            + (-6 * t**2 + 6 * t) * y1 + (3 * t**2 - 2 * t) * h * f1) / h


class _Batch:
    """Vectorised Dormand-Prince integration of many seeds with event checks."""

    def __init__(self, fld: FlowField, seeds, horizon, direction=1.0, rtol=DEFAULT_RTOL, atol=None,
                 escape_radius=None, box=None, delta_return=None, stop_on_closed=True,
                 record=False, max_steps=MAX_STEPS, on_nodes=None):
        self.f = fld
        seeds = np.atleast_2d(np.asarray(seeds, float))
        self.n = seeds.shape[0]
        R = fld.tv.vorticity.support_radius
        scale = fld.scale
        self.horizon = float(horizon)
        self.sign = 1.0 if direction >= 0 else -1.0
        self.rtol = rtol
        self.atol = (rtol * np.array([scale, scale**fld.power]) if atol is None
                     else np.broadcast_to(np.asarray(atol, float), (2,)))
        self.escape_radius = 5.0 * R if escape_radius is None else escape_radius
        self.box = self.escape_radius if box is None else box
        self.delta = 1e-4 * scale if delta_return is None else delta_return
        self.stop_on_closed = stop_on_closed
        self.max_steps = max_steps
        self.on_nodes = on_nodes
        ca, cq = fld.to_canonical(seeds[:, 0], seeds[:, 1])
        self.seed_phys = seeds
        self.seed = np.column_stack([ca, cq])
        self.y = self.seed.copy()
        self.t = np.zeros(self.n)
        phi, fa, fq = fld.evaluate(ca, cq)
        self.phi0 = phi
        self.fy = self.sign * np.column_stack([fa, fq])
        speed = np.hypot(self.fy[:, 0], self.fy[:, 1])
        self.normal = self.fy / np.where(speed > 0, speed, 1.0)[:, None]
        self.h = np.minimum(0.01 * scale / np.maximum(speed, 1e-300), self.horizon)
        self.h = np.maximum(self.h, 1e-12 * max(self.horizon, 1.0))
        self.g = np.zeros(self.n)
        self.left_seed = np.zeros(self.n, dtype=bool)
        self.steps = np.zeros(self.n, dtype=np.int64)
        self.drift = np.zeros(self.n)
        self.out_of_box = np.zeros(self.n, dtype=bool)
        self.verdict = np.full(self.n, "", dtype=object)
        self.reason = np.full(self.n, "", dtype=object)
        self.period = np.full(self.n, np.nan)
        self.active = np.ones(self.n, dtype=bool)
        self.norm = np.abs(self.phi0) + fld.phi_scale()
        self.record = record
        if record:
            self.nodes = [[(0.0, seeds[i, 0], seeds[i, 1], phi[i])] for i in range(self.n)]
        if on_nodes is not None:
            on_nodes(np.arange(self.n), self.t.copy(), seeds[:, 0].copy(), seeds[:, 1].copy(), phi)

    def _stages(self, idx, y, fy, h):
        K = np.empty((7, idx.size, 2))
        K[0] = fy
        for s in range(1, 6):
            dy = np.tensordot(_A[s, :s], K[:s], axes=(0, 0)) * h[:, None]
            yy = y + dy
            _, fa, fq = self.f.evaluate(yy[:, 0], yy[:, 1])
            K[s] = self.sign * np.column_stack([fa, fq])
        ynew = y + h[:, None] * np.tensordot(_B, K[:6], axes=(0, 0))
        phi, fa, fq = self.f.evaluate(ynew[:, 0], ynew[:, 1])
        K[6] = self.sign * np.column_stack([fa, fq])
        err = h[:, None] * np.tensordot(_E, K, axes=(0, 0))
        return ynew, phi, K[6], err

    def run(self):
        while np.any(self.active):
            idx = np.flatnonzero(self.active)
            y, fy = self.y[idx], self.fy[idx]
            h = np.minimum(self.h[idx], self.horizon - self.t[idx])
            ynew, phi, fnew, err = self._stages(idx, y, fy, h)
            sc = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(ynew))
            en = np.sqrt(np.mean((err / sc) ** 2, axis=1))
            ok = np.isfinite(en) & (en <= 1.0) & np.all(np.isfinite(ynew), axis=1)
            with np.errstate(divide="ignore"):
                fac = np.where(en > 0, 0.9 * en ** (-0.2), 10.0)
            fac = np.clip(np.where(np.isfinite(fac), fac, 0.2), 0.2, 10.0)
            fac = np.where(ok, fac, np.minimum(fac, 1.0))
            self.h[idx] = h * fac
            tiny = ~ok & (h < 1e-14 * np.maximum(1.0, self.t[idx]))
            if np.any(tiny):
                self._finish(idx[tiny], UNDECIDED, "step-size underflow near a stagnation point")
            if np.any(ok):
                self._accept(idx[ok], y[ok], ynew[ok], fy[ok], fnew[ok], h[ok], phi[ok])
        return self

    def _finish(self, ids, verdict, reason):
        self.verdict[ids] = verdict
        self.reason[ids] = reason
        self.active[ids] = False

    def _accept(self, ids, y0, y1, f0, f1, h, phi):
        f = self.f
        self.t[ids] += h
        self.steps[ids] += 1
        self.y[ids] = y1
        self.fy[ids] = f1
        self.drift[ids] = np.maximum(self.drift[ids], np.abs(phi - self.phi0[ids]) / self.norm[ids])
        a, b = f.to_physical(y1[:, 0], y1[:, 1])
        if self.record:
            for k, i in enumerate(ids):
                self.nodes[i].append((self.sign * self.t[i], a[k], b[k], phi[k]))
        if self.on_nodes is not None:
            self.on_nodes(ids, self.sign * self.t[ids], a, b, phi)
        self.out_of_box[ids] |= (np.abs(a) > self.box) | (b > self.box)

        # escape: far along the axis on a negative level
        esc = (np.abs(a) > self.escape_radius) & (phi <= 0.0)
        if np.any(esc):
            self._finish(ids[esc], ESCAPING, "axial coordinate beyond the escape radius with phi <= 0")

        # closed orbit: crossing of the section through the seed, same direction as at launch
        gnew = np.einsum("ij,ij->i", y1 - self.seed[ids], self.normal[ids])
        gold = self.g[ids]
        self.g[ids] = gnew
        _, bs = f.to_physical(self.seed[ids, 0], self.seed[ids, 1])
        d_now = np.hypot(a - self.seed_phys[ids, 0], b - bs)
        self.left_seed[ids] |= d_now > 10.0 * self.delta
        cross = (gold < 0.0) & (gnew >= 0.0) & self.left_seed[ids] & ~esc
        if np.any(cross):
            c = np.flatnonzero(cross)
            theta = gold[c] / (gold[c] - gnew[c])
            Y0, Y1, F0, F1, H = y0[c], y1[c], f0[c], f1[c], h[c]
            n = self.normal[ids[c]]
            sd = self.seed[ids[c]]
            for _ in range(8):
                P = _hermite(Y0, Y1, F0, F1, H, theta)
                dP = _hermite_dt(Y0, Y1, F0, F1, H, theta) * H[:, None]
                gv = np.einsum("ij,ij->i", P - sd, n)
                dg = np.einsum("ij,ij->i", dP, n)
                theta = np.clip(theta - gv / np.where(dg != 0, dg, 1.0), 0.0, 1.0)
            P = _hermite(Y0, Y1, F0, F1, H, theta)
            pa, pb = f.to_physical(P[:, 0], P[:, 1])
            dist = np.hypot(pa - self.seed_phys[ids[c], 0], pb - bs[c])
            closed = dist < self.delta
            if np.any(closed):
                cid = ids[c[closed]]
                self.period[cid] = self.t[cid] - H[closed] * (1.0 - theta[closed])
                if self.stop_on_closed:
                    # end the path at the interpolated return point rather than the step end
                    k = np.flatnonzero(closed)
                    self.y[cid] = P[k]
                    self.t[cid] = self.period[cid]
                    if self.record:
                        pphi = f.evaluate(P[k, 0], P[k, 1])[0]
                        for j, i in enumerate(cid):
                            self.nodes[i][-1] = (self.sign * self.t[i], pa[k[j]], pb[k[j]], pphi[j])
                    self._finish(cid, BOUNDED, "closed orbit: returned to the seed section")
                else:
                    self.verdict[cid] = BOUNDED

        live = self.active[ids]
        done_t = live & (self.t[ids] >= self.horizon * (1.0 - 1e-14))
        if np.any(done_t):
            d = ids[done_t]
            inb = ~self.out_of_box[d]
            if np.any(inb):
                self._finish(d[inb], BOUNDED, "stayed inside the bounding box for the full horizon")
            if np.any(~inb):
                self._finish(d[~inb], UNDECIDED, "left the bounding box without meeting the escape test")
        over = self.active[ids] & (self.steps[ids] >= self.max_steps)
        if np.any(over):
            self._finish(ids[over], UNDECIDED, f"step limit {self.max_steps} reached")
        # a closed orbit found earlier but integration continued to the horizon
        fin = ~self.active[ids] & (self.verdict[ids] == BOUNDED) & np.isfinite(self.period[ids])
        self.reason[ids[fin]] = "closed orbit: returned to the seed section"


def _check_seed(fld, seeds):
    seeds = np.atleast_2d(np.asarray(seeds, float))
    if seeds.shape[1] != 2 or not np.all(np.isfinite(seeds)):
        raise ValueError("seeds must be finite (a, b) pairs")
    if np.any(seeds[:, 1] < 0.0):
        raise ValueError("seeds must lie in the half-plane b >= 0")
    return seeds


def trace_many(tv, seeds, horizon, tol=DEFAULT_RTOL, field=None, direction=1.0, record=True,
               **kwargs):
    """Trace a batch of seeds; returns one StreamlineTrace per seed."""
    fld = field or QuadratureField(tv)
    seeds = _check_seed(fld, seeds)
    batch = _Batch(fld, seeds, horizon, direction=direction, rtol=tol, record=record, **kwargs).run()
    out = []
    for i in range(batch.n):
        if record:
            arr = np.asarray(batch.nodes[i])
        else:
            a, b = fld.to_physical(batch.y[i:i + 1, 0], batch.y[i:i + 1, 1])
            arr = np.array([[0.0, *seeds[i], batch.phi0[i]],
                            [batch.sign * batch.t[i], a[0], b[0], np.nan]])
        phi0 = float(batch.phi0[i])
        asym = escape_asymptote(tv, phi0) if batch.verdict[i] == ESCAPING else None
        per = float(batch.period[i]) if np.isfinite(batch.period[i]) else None
        out.append(StreamlineTrace(
            seed=(float(seeds[i, 0]), float(seeds[i, 1])), t=arr[:, 0], a=arr[:, 1], b=arr[:, 2],
            phi=arr[:, 3], phi_seed=phi0, max_phi_drift=float(batch.drift[i]),
            verdict=str(batch.verdict[i]), reason=str(batch.reason[i]), steps=int(batch.steps[i]),
            is_ring=fld.is_ring, escape_asymptote=asym,
            final_transverse=float(arr[-1, 2]) if batch.verdict[i] == ESCAPING else None,
            period=per))
    return out


def trace(tv, seed, horizon, tol=DEFAULT_RTOL, field=None, direction=1.0, **kwargs) -> StreamlineTrace:
    """Trace one seed in the moving frame up to time ``horizon``.

    ``direction=-1`` integrates backward in time (node times are negative).
    """
    return trace_many(tv, [seed], horizon, tol=tol, field=field, direction=direction, **kwargs)[0]


@dataclass
class ReversalCheck:
    """Forward-then-backward return distance and the local tolerance budget it is judged against.

    The budget is the per-step absolute allowance ``tol * scale`` summed over
    the accepted steps of both legs, i.e. the sum of local errors the step-size
    control admits along the path.
    """
    error: float
    budget: float
    steps: int

    def to_dict(self):
        return {"error": self.error, "budget": self.budget, "steps": self.steps}


def time_reversal_check(tv, seed, horizon, tol=DEFAULT_RTOL, field=None) -> ReversalCheck:
    """Trace forward for ``horizon``, then backward for the same time, from the end point."""
    fld = field or QuadratureField(tv)
    kw = dict(stop_on_closed=False, escape_radius=np.inf, box=np.inf)
    fwd = trace(tv, seed, horizon, tol, fld, 1.0, record=False, **kw)
    end = (fwd.a[-1], fwd.b[-1])
    back = trace(tv, end, fwd.t[-1], tol, fld, -1.0, record=False, **kw)
    err = float(np.hypot(back.a[-1] - seed[0], back.b[-1] - seed[1]))
    steps = int(fwd.steps + back.steps)
    return ReversalCheck(err, tol * fld.scale * steps, steps)


def time_reversal_error(tv, seed, horizon, tol=DEFAULT_RTOL, field=None):
    """Distance between the seed and the result of tracing forward then backward."""
    return time_reversal_check(tv, seed, horizon, tol, field).error


# ------------------------------------------------------------- escape lemma
@dataclass
class EscapeCheck:
    hypotheses_hold: bool
    escaped: bool
    level: float
    predicted: float | None
    measured: float | None
    relative_error: float | None
    reason: str

    def __bool__(self):
        return bool(self.hypotheses_hold and self.escaped)


def verify_escape(tv, seed, field=None, far=40.0, tol=DEFAULT_RTOL, n_axis=400, match=0.02):
    """Check the escape-lemma hypotheses at ``seed`` and confirm by tracing.

    Hypotheses: the seed is in the left half (a < 0), its level
    gamma' = phi(seed) is negative, and phi(0, s) > gamma' for every s between
    the asymptote and the seed's transverse coordinate.  The trace then runs
    until |a| exceeds ``far`` support radii; the final transverse position
    must match the predicted asymptote within ``match`` (relative).
    """
    fld = field or QuadratureField(tv)
    a, b = float(seed[0]), float(seed[1])
    if a >= 0.0 or b <= 0.0:
        return EscapeCheck(False, False, float("nan"), None, None, None, "seed not in the left half-plane")
    level = float(fld.phi([a], [b])[0])
    if level >= 0.0:
        return EscapeCheck(False, False, level, None, None, None, "hypotheses fail: phi(seed) >= 0")
    pred = escape_asymptote(tv, level)
    s = np.linspace(min(pred, b), max(pred, b), n_axis + 2)[1:-1]
    axis = fld.phi(np.zeros_like(s), s)
    if np.any(axis <= level):
        return EscapeCheck(False, False, level, pred, None, None,
                           "hypotheses fail: axis profile reaches the level inside the interval")
    R = tv.vorticity.support_radius
    horizon = 4.0 * far * R / tv.speed
    tr = trace(tv, (a, b), horizon, tol, fld, record=False, escape_radius=far * R, box=np.inf)
    if tr.verdict != ESCAPING:
        return EscapeCheck(True, False, level, pred, None, None, f"trace verdict {tr.verdict}: {tr.reason}")
    meas = float(tr.b[-1])
    rel = abs(meas - pred) / pred
    return EscapeCheck(True, rel <= match, level, pred, meas, rel,
                       "escape confirmed" if rel <= match else "asymptote mismatch")


# ----------------------------------------------------------- invariance check
@dataclass
class InvarianceReport:
    n_interior: int
    n_exterior: int
    horizon: float
    interior_fraction: float
    exterior_fraction: float
    max_phi_drift: float
    verdicts: dict
    seeds_interior: np.ndarray = field(repr=False, default=None)
    seeds_exterior: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {
            "n_interior": self.n_interior, "n_exterior": self.n_exterior, "horizon": self.horizon,
            "interior_fraction": self.interior_fraction, "exterior_fraction": self.exterior_fraction,
            "max_phi_drift": self.max_phi_drift, "verdicts": dict(self.verdicts),
        }


def _sample(rng, n, accept, box, batch=4096):
    a0, a1, b0, b1 = box
    out = []
    got = 0
    for _ in range(10000):
        if got >= n:
            break
        pa = rng.uniform(a0, a1, batch)
        pb = rng.uniform(b0, b1, batch)
        ok = accept(pa, pb)
        out.append(np.column_stack([pa[ok], pb[ok]]))
        got += int(ok.sum())
    pts = np.concatenate(out)[:n]
    if pts.shape[0] < n:
        raise RuntimeError("could not place the requested number of seeds")
    return pts


def domain_box(domain):
    """Bounding box (a0, a1, b0, b1) of an extracted domain in the upper half-plane."""
    lmax = float(np.max(domain.boundary_l))
    return (-lmax, lmax, float(domain.boundary_s[0]), float(domain.boundary_s[-1]))


def verify_domain_invariance(tv, domain, n_particles=1000, T=50.0, field=None, margin=1e-3, seed=0,
                             tol=DEFAULT_RTOL):
    """Fraction of interior seeds that stay inside, and exterior seeds that stay outside.

    Interior seeds are uniform in the domain at distance >= ``margin * scale``
    from its boundary; exterior seeds are uniform between the boundary and the
    doubled bounding box (same margin).  Membership is tested at every node.
    """
    fld = field or QuadratureField(tv)
    rng = np.random.default_rng(seed)
    scale = tv.scale
    mg = margin * scale
    a0, a1, b0, b1 = domain_box(domain)
    w = max(a1, b1)
    inner = _sample(rng, n_particles,
                    lambda a, b: domain.contains(a, b) & (domain.distance_to_boundary(a, b) >= mg),
                    (a0, a1, b0, b1))
    outer = _sample(rng, n_particles,
                    lambda a, b: ~domain.contains(a, b) & (domain.distance_to_boundary(a, b) >= mg),
                    (-2 * w, 2 * w, mg, 2 * b1))

    def run(seeds, want_inside):
        bad = np.zeros(seeds.shape[0], dtype=bool)

        def on_nodes(ids, t, a, b, phi):
            bad[ids] |= domain.contains(a, b) != want_inside

        batch = _Batch(fld, seeds, T, rtol=tol, on_nodes=on_nodes).run()
        return bad, batch

    bad_in, bi = run(inner, True)
    bad_out, bo = run(outer, False)
    verdicts = {}
    for v in list(bi.verdict) + list(bo.verdict):
        verdicts[v] = verdicts.get(v, 0) + 1
    return InvarianceReport(
        n_interior=inner.shape[0], n_exterior=outer.shape[0], horizon=T,
        interior_fraction=float(1.0 - bad_in.mean()), exterior_fraction=float(1.0 - bad_out.mean()),
        max_phi_drift=float(max(bi.drift.max(), bo.drift.max())), verdicts=verdicts,
        seeds_interior=inner, seeds_exterior=outer)


@dataclass
class AxisPassage:
    n: int
    through_hole: int
    entered_domain: int
    reached_behind: int

    def to_dict(self):
        return dict(n=self.n, through_hole=self.through_hole, entered_domain=self.entered_domain,
                    reached_behind=self.reached_behind)


def axis_passage(tv, domain, n=20, T=50.0, field=None, tol=DEFAULT_RTOL, band=0.5):
    """Exterior seeds ahead of the vortex close to the axis of symmetry.

    Seeds sit at a = 2 x (domain half-length) with transverse coordinate in
    (0, band * width], where width is L for a toroidal domain and R otherwise.
    A seed passes through the hole when it crosses a = 0 with 0 < b < L.
    """
    fld = field or QuadratureField(tv)
    a0, a1, b0, b1 = domain_box(domain)
    L = domain.inner_radius
    width = L if L > 0 else domain.outer_radius
    bs = np.linspace(0.0, band * width, n + 1)[1:]
    seeds = np.column_stack([np.full(n, 2.0 * a1), bs])
    hole = np.zeros(n, dtype=bool)
    entered = np.zeros(n, dtype=bool)
    behind = np.zeros(n, dtype=bool)
    last_a = seeds[:, 0].copy()

    def on_nodes(ids, t, a, b, phi):
        crossed = (last_a[ids] > 0.0) & (a <= 0.0)
        hole[ids] |= crossed & (b < L)
        entered[ids] |= domain.contains(a, b)
        behind[ids] |= a < -2.0 * a1
        last_a[ids] = a

    _Batch(fld, seeds, T, rtol=tol, on_nodes=on_nodes).run()
    return AxisPassage(n=n, through_hole=int(hole.sum()), entered_domain=int(entered.sum()),
                       reached_behind=int(behind.sum()))
