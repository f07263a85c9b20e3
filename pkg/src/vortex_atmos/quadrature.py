"""Adaptive panel quadrature of singular kernels against a source density.

A source region is a rectangle in some parameter plane, mapped to the
physical half-plane either by the identity (``RectRegion``) or by polar
coordinates about a centre (``PolarRegion``).  Each region is cut into base
panels carrying tensor Gauss-Legendre rules.  For every evaluation point the
panels are refined breadth-first, vectorised over all (point, panel) pairs:

* far panels (distance > ``far_ratio`` * diameter from every singular point)
  take the plain tensor rule;
* a panel containing the point is split at the point, and each sub-panel,
  which has the point at a corner, is integrated by a Duffy map whose radial
  variable is graded (s = sigma^3) to absorb log and 1/rho singularities;
* everything else is quartered and revisited.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

_CONTAIN_TOL = 1e-12


def _snap(x, lo, hi, rel=1e-9):
    w = rel * (hi - lo)
    x = np.where(x - lo < w, lo, x)
    return np.where(hi - x < w, hi, x)


def _gauss01(q: int):
    x, w = leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle [a0, a1] x [b0, b1] in physical coordinates."""

    a0: float
    a1: float
    b0: float
    b1: float
    n_a: int = 4
    n_b: int = 4

    polar = False

    def param_bounds(self):
        return self.a0, self.a1, self.b0, self.b1

    def to_physical(self, u, v):
        return u, v, np.ones_like(u)

    def to_param(self, p0, p1):
        return p0, p1

    @property
    def full_turn(self):
        return False


@dataclass(frozen=True)
class PolarRegion:
    """Annular sector {c + rho (cos a, sin a): rho0 <= rho <= rho1, alpha0 <= a <= alpha1}."""

    c0: float
    c1: float
    rho1: float
    alpha0: float = 0.0
    alpha1: float = 2.0 * np.pi
    rho0: float = 0.0
    n_rho: int = 4
    n_alpha: int = 8

    polar = True

    @property
    def n_a(self):
        return self.n_rho

    @property
    def n_b(self):
        return self.n_alpha

    def param_bounds(self):
        return self.rho0, self.rho1, self.alpha0, self.alpha1

    def to_physical(self, u, v):
        return self.c0 + u * np.cos(v), self.c1 + u * np.sin(v), u

    def to_param(self, p0, p1):
        d0 = p0 - self.c0
        d1 = p1 - self.c1
        rho = np.hypot(d0, d1)
        alpha = np.mod(np.arctan2(d1, d0) - self.alpha0, 2.0 * np.pi) + self.alpha0
        return rho, alpha

    @property
    def full_turn(self):
        return self.alpha1 - self.alpha0 >= 2.0 * np.pi - 1e-12


Region = RectRegion | PolarRegion

# kernel(x0, x1, y0, y1) -> tuple of component arrays, broadcastable to y0.shape
KernelFn = Callable[..., tuple]
# extra_singular(x0, x1) -> list of (s0, s1) arrays: singular points besides x itself
SingularFn = Callable[[np.ndarray, np.ndarray], list]


class _PanelStore:
    """Lazily refined panel tree of one region with cached nodes and weighted density.

    Node positions and ``weight * jacobian * density`` depend only on the
    panel, so they are computed once and shared by every evaluation point.
    """

    def __init__(self, region, density, order, capacity):
        self.region = region
        self.density = density
        gx, gw = _gauss01(order)
        self.gu = np.repeat(gx, order)
        self.gv = np.tile(gx, order)
        self.gw = np.outer(gw, gw).ravel()
        self.capacity = capacity
        self.q = order * order
        self._alloc(1024)
        A0, A1, B0, B1 = region.param_bounds()
        ea = np.linspace(A0, A1, region.n_a + 1)
        eb = np.linspace(B0, B1, region.n_b + 1)
        bu0, bv0 = np.meshgrid(ea[:-1], eb[:-1], indexing="ij")
        bu1, bv1 = np.meshgrid(ea[1:], eb[1:], indexing="ij")
        self.n = 0
        self.base = self.add(bu0.ravel(), bu1.ravel(), bv0.ravel(), bv1.ravel())
        self.n_base = self.n

    def _alloc(self, size):
        self.u0 = np.empty(size)
        self.u1 = np.empty(size)
        self.v0 = np.empty(size)
        self.v1 = np.empty(size)
        self.child = np.full((size, 4), -1, dtype=np.int64)
        self.rchild = np.full((size, 2), -1, dtype=np.int64)
        self.Y0 = np.empty((size, self.q))
        self.Y1 = np.empty((size, self.q))
        self.WF = np.empty((size, self.q))

    def _grow(self, need):
        size = self.u0.size
        if need <= size:
            return
        new = max(need, 2 * size)
        names = ("u0", "u1", "v0", "v1", "child", "rchild", "Y0", "Y1", "WF")
        old = [getattr(self, k) for k in names]
        self._alloc(new)
        for dst, src in zip((getattr(self, k) for k in names), old):
            dst[:size] = src

    def reset_if_full(self):
        if self.n > self.capacity:
            self.n = self.n_base
            self.child[: self.n_base] = -1
            self.rchild[: self.n_base] = -1

    def add(self, u0, u1, v0, v1):
        m = u0.size
        start = self.n
        self._grow(start + m)
        ids = np.arange(start, start + m)
        self.u0[ids], self.u1[ids], self.v0[ids], self.v1[ids] = u0, u1, v0, v1
        self.child[ids] = -1
        self.rchild[ids] = -1
        du = (u1 - u0)[:, None]
        dv = (v1 - v0)[:, None]
        gu, gw = self.gu, self.gw
        if self.region.polar:
            # graded radial rule on panels touching the polar centre
            graded = (u0 == 0.0)[:, None]
            gu = np.where(graded, self.gu**2, self.gu)
            gw = np.where(graded, self.gw * 2.0 * self.gu, self.gw)
        u = u0[:, None] + du * gu
        v = v0[:, None] + dv * self.gv
        y0, y1, jac = self.region.to_physical(u, v)
        self.Y0[ids] = y0
        self.Y1[ids] = y1
        self.WF[ids] = gw * du * dv * jac * self.density(y0, y1)
        self.n = start + m
        return ids

    def children(self, ids):
        uniq = np.unique(ids)
        missing = uniq[self.child[uniq, 0] < 0]
        if missing.size:
            a0, a1 = self.u0[missing], self.u1[missing]
            c0, c1 = self.v0[missing], self.v1[missing]
            am, cm = 0.5 * (a0 + a1), 0.5 * (c0 + c1)
            new = self.add(np.concatenate([a0, am, am, a0]), np.concatenate([am, a1, a1, am]),
                           np.concatenate([c0, c0, cm, cm]), np.concatenate([cm, cm, c1, c1]))
            self.child[missing] = new.reshape(4, -1).T
        return self.child[ids]

    def radial_children(self, ids):
        """Inner and outer radial halves (full angular width) of each panel."""
        uniq = np.unique(ids)
        missing = uniq[self.rchild[uniq, 0] < 0]
        if missing.size:
            a0, a1 = self.u0[missing], self.u1[missing]
            c0, c1 = self.v0[missing], self.v1[missing]
            am = 0.5 * (a0 + a1)
            new = self.add(np.concatenate([a0, am]), np.concatenate([am, a1]),
                           np.concatenate([c0, c0]), np.concatenate([c1, c1]))
            self.rchild[missing] = new.reshape(2, -1).T
        return self.rchild[ids]


class PanelQuadrature:
    """Integrate ``int K_c(x, y) f(y) dA(y)`` over a list of regions, for each component c.

    ``kernel`` is either the name of a compiled kernel (``"ring"``,
    ``"dipole"``, ``"ring_axis"``) or a numpy callable returning a tuple of
    ``n_components`` arrays.
    """

    def __init__(
        self,
        regions: Sequence[Region],
        density: Callable[[np.ndarray, np.ndarray], np.ndarray],
        kernel,
        n_components: int | None = None,
        extra_singular: SingularFn | None = None,
        order: int = 8,
        duffy_order: int = 14,
        far_ratio: float = 0.75,
        max_depth: int = 40,
        chunk: int = 512,
        cache_panels: int = 40000,
    ):
        self.regions = list(regions)
        self.density = density
        if isinstance(kernel, str):
            from . import _compiled

            self.kernel_id = _compiled.KERNEL_IDS[kernel]
            self.n_components = _compiled.N_COMPONENTS[self.kernel_id]
            self._compiled = _compiled
        else:
            self.kernel_id = None
            if n_components is None:
                raise ValueError("n_components is required for a callable kernel")
            self.n_components = n_components
        self.kernel = kernel
        self.extra_singular = extra_singular
        self.far_ratio = far_ratio
        self.max_depth = max_depth
        self.chunk = chunk
        self.stores = [_PanelStore(r, density, order, cache_panels) for r in self.regions]
        dx, dw = _gauss01(duffy_order)
        # Duffy nodes: sigma (graded radial) x t (along the opposite edge)
        sig = np.repeat(dx, duffy_order)
        self._d_s = sig**3
        self._d_t = np.tile(dx, duffy_order)
        self._d_w = np.outer(dw, dw).ravel() * 3.0 * sig**5
        # centre wedges: u = sigma^3 radially, plain Gauss in angle
        sig = np.repeat(dx, duffy_order)
        self._c_s = sig**3
        self._c_t = np.tile(dx, duffy_order)
        self._c_w = np.outer(dw, dw).ravel() * 3.0 * sig**2
        self.depth_exhausted = 0

    # ------------------------------------------------------------------ api
    def evaluate(self, p0, p1) -> np.ndarray:
        """Return an array of shape (n_components, N)."""
        p0 = np.ascontiguousarray(np.atleast_1d(np.asarray(p0, dtype=float)).ravel())
        p1 = np.ascontiguousarray(np.atleast_1d(np.asarray(p1, dtype=float)).ravel())
        n = p0.size
        out = np.zeros((self.n_components, n))
        for start in range(0, n, self.chunk):
            sl = slice(start, min(start + self.chunk, n))
            for store in self.stores:
                store.reset_if_full()
                out[:, sl] += self._region(store, p0[sl], p1[sl])
        return out

    # ------------------------------------------------------------ geometry
    def _distance(self, region, x0, x1, xu, xv, u0, u1, v0, v1):
        """Physical distance from x to each panel, and panel diameter."""
        if not region.polar:
            d0 = np.maximum(np.maximum(u0 - x0, x0 - u1), 0.0)
            d1 = np.maximum(np.maximum(v0 - x1, x1 - v1), 0.0)
            return np.hypot(d0, d1), np.hypot(u1 - u0, v1 - v0)
        dalpha = v1 - v0
        diam = np.hypot(u1 - u0, 2.0 * u1 * np.sin(0.5 * np.minimum(dalpha, np.pi)))
        inside = np.zeros(xu.shape, dtype=bool)
        for shift in self._alpha_shifts(region):
            inside |= (xv + shift >= v0) & (xv + shift <= v1)
        d_in = np.maximum(np.maximum(u0 - xu, xu - u1), 0.0)
        d_out = np.minimum(
            self._seg_dist(region, x0, x1, u0, u1, v0),
            self._seg_dist(region, x0, x1, u0, u1, v1),
        )
        return np.where(inside, d_in, d_out), diam

    @staticmethod
    def _seg_dist(region, x0, x1, ra, rb, a):
        c, s = np.cos(a), np.sin(a)
        px = x0 - region.c0
        py = x1 - region.c1
        t = np.clip(px * c + py * s, ra, rb)
        return np.hypot(px - t * c, py - t * s)

    @staticmethod
    def _alpha_shifts(region):
        return (0.0, 2.0 * np.pi) if (region.polar and region.full_turn) else (0.0,)

    def _singular_distance(self, x0, x1, region, u0, u1, v0, v1):
        if self.extra_singular is None:
            return None
        best = None
        for s0, s1 in self.extra_singular(x0, x1):
            su, sv = region.to_param(s0, s1)
            d, diam = self._distance(region, s0, s1, su, sv, u0, u1, v0, v1)
            # a singular point sitting on x itself is already handled by the Duffy map
            d = np.where(np.hypot(s0 - x0, s1 - x1) <= 1e-14 * (1.0 + diam), np.inf, d)
            best = d if best is None else np.minimum(best, d)
        return best

    @staticmethod
    def _aspect(region, u0, u1, v0, v1):
        a = u1 - u0
        b = 0.5 * (u0 + u1) * (v1 - v0) if region.polar else v1 - v0
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(lo > 0, hi / lo, np.inf)

    # ---------------------------------------------------------- integration
    def _accumulate(self, out, x0, x1, pid, pan, Y0, Y1, WF):
        if self.kernel_id is not None:
            self._compiled.accumulate(self.kernel_id, x0, x1, pid.astype(np.int64),
                                      pan.astype(np.int64), Y0, Y1, WF, out)
            return
        y0, y1, wf = Y0[pan], Y1[pan], WF[pan]
        vals = self.kernel(x0[pid][:, None], x1[pid][:, None], y0, y1)
        n = out.shape[1]
        for c in range(self.n_components):
            contrib = np.where(wf != 0.0, vals[c] * wf, 0.0).sum(axis=1)
            out[c] += np.bincount(pid, weights=contrib, minlength=n)

    def _duffy(self, region, out, x0, x1, pid, u0, u1, v0, v1, corner):
        cu = np.stack([u0, u1, u1, u0], axis=1)
        cv = np.stack([v0, v0, v1, v1], axis=1)
        idx = np.arange(u0.size)
        pu, pv = cu[idx, corner], cv[idx, corner]
        us, vs, ws = [], [], []
        s, t, wd = self._d_s, self._d_t, self._d_w
        for k in (1, 2):
            c1 = (corner + k) % 4
            c2 = (corner + k + 1) % 4
            au, av = cu[idx, c1], cv[idx, c1]
            bu, bv = cu[idx, c2], cv[idx, c2]
            cross = np.abs((au - pu) * (bv - av) - (av - pv) * (bu - au))
            eu = au[:, None] + t * (bu - au)[:, None] - pu[:, None]
            ev = av[:, None] + t * (bv - av)[:, None] - pv[:, None]
            us.append(pu[:, None] + s * eu)
            vs.append(pv[:, None] + s * ev)
            ws.append(wd * cross[:, None])
        u = np.concatenate(us, axis=1)
        v = np.concatenate(vs, axis=1)
        w = np.concatenate(ws, axis=1)
        y0, y1, jac = region.to_physical(u, v)
        wf = np.ascontiguousarray(w * jac * self.density(y0, y1))
        self._accumulate(out, x0, x1, pid, idx, np.ascontiguousarray(y0), np.ascontiguousarray(y1), wf)

    def _centre_wedge(self, region, out, x0, x1, pid, u0, u1, v0, v1):
        """Wedge whose apex is the evaluation point: radial nodes graded as u = u1 sigma^3.

        The integrand behaves like u log u near the apex; the cubic grading
        turns it into sigma^5 log sigma, which Gauss-Legendre handles to near
        machine precision.
        """
        s, t, wd = self._c_s, self._c_t, self._c_w
        u = u1[:, None] * s
        v = v0[:, None] + (v1 - v0)[:, None] * t
        w = wd * (u1 * (v1 - v0))[:, None]
        y0, y1, jac = region.to_physical(u, v)
        wf = np.ascontiguousarray(w * jac * self.density(y0, y1))
        idx = np.arange(pid.size)
        self._accumulate(out, x0, x1, pid, idx, np.ascontiguousarray(y0), np.ascontiguousarray(y1), wf)

    def _region(self, store, x0, x1):
        region = store.region
        n = x0.size
        out = np.zeros((self.n_components, n))
        xu, xv = region.to_param(x0, x1)
        A0, A1, B0, B1 = region.param_bounds()
        scale = max(A1 - A0, B1 - B0)
        at_centre = region.polar & (xu <= 1e-13 * scale)
        shifts = self._alpha_shifts(region)

        nb = store.base.size
        pid = np.repeat(np.arange(n), nb)
        pan = np.tile(store.base, n)
        corner = np.full(pid.size, -1)
        depth = np.zeros(pid.size, dtype=int)
        u0, u1, v0, v1 = store.u0[pan], store.u1[pan], store.v0[pan], store.v1[pan]

        while pid.size:
            normal = corner < 0
            nxt = []

            # ---- ordinary panels
            if np.any(normal):
                q = np.flatnonzero(normal)
                p, pq, dq = pid[q], pan[q], depth[q]
                a0, a1, c0, c1 = u0[q], u1[q], v0[q], v1[q]
                tol_u = _CONTAIN_TOL * np.maximum(a1 - a0, scale * 1e-3)
                tol_v = _CONTAIN_TOL * np.maximum(c1 - c0, scale * 1e-3)
                contains = np.zeros(q.size, dtype=bool)
                xv_eff = xv[p].copy()
                for sh in shifts:
                    hit = ((xu[p] >= a0 - tol_u) & (xu[p] <= a1 + tol_u)
                           & (xv[p] + sh >= c0 - tol_v) & (xv[p] + sh <= c1 + tol_v) & ~contains)
                    xv_eff = np.where(hit, xv[p] + sh, xv_eff)
                    contains |= hit
                contains &= ~at_centre[p]
                d, diam = self._distance(region, x0[p], x1[p], xu[p], xv[p], a0, a1, c0, c1)
                dx = self._singular_distance(x0[p], x1[p], region, a0, a1, c0, c1)
                centre_ok = at_centre[p] & (a0 == 0.0)
                if dx is not None:
                    d = np.minimum(d, dx)
                    centre_ok &= dx > self.far_ratio * diam
                graded = ~contains & centre_ok
                far = ~contains & ~centre_ok & (d > self.far_ratio * diam)
                if np.any(graded):
                    g = graded
                    self._centre_wedge(region, out, x0, x1, p[g], a0[g], a1[g], c0[g], c1[g])
                exhausted = ~contains & ~far & ~graded & (dq >= self.max_depth)
                self.depth_exhausted += int(exhausted.sum())
                far |= exhausted
                if np.any(far):
                    self._accumulate(out, x0, x1, p[far], pq[far], store.Y0, store.Y1, store.WF)
                if np.any(contains):
                    # split at the point: four panels with the point at a corner
                    k = contains
                    su = _snap(np.clip(xu[p][k], a0[k], a1[k]), a0[k], a1[k])
                    sv = _snap(np.clip(xv_eff[k], c0[k], c1[k]), c0[k], c1[k])
                    pk, dk = p[k], dq[k]
                    for lo_u, hi_u, lo_v, hi_v, cidx in (
                        (a0[k], su, c0[k], sv, 2),
                        (su, a1[k], c0[k], sv, 3),
                        (su, a1[k], sv, c1[k], 0),
                        (a0[k], su, sv, c1[k], 1),
                    ):
                        keep = (hi_u - lo_u > 0) & (hi_v - lo_v > 0)
                        if np.any(keep):
                            m = int(keep.sum())
                            nxt.append((pk[keep], np.full(m, -1), lo_u[keep], hi_u[keep], lo_v[keep],
                                        hi_v[keep], np.full(m, cidx), dk[keep]))
                split = ~contains & ~far & ~graded
                # wedges at the polar centre with the point much nearer the centre than
                # their outer radius: halve radially so the refinement stays linear
                radial = split & region.polar & (a0 == 0.0) & (xu[p] < 0.25 * a1)
                for sel, kids_of, nk in ((split & ~radial, store.children, 4),
                                         (radial, store.radial_children, 2)):
                    if not np.any(sel):
                        continue
                    kids = kids_of(pq[sel])
                    ps, ds = p[sel], dq[sel] + 1
                    for j in range(nk):
                        kj = kids[:, j]
                        nxt.append((ps, kj, store.u0[kj], store.u1[kj], store.v0[kj], store.v1[kj],
                                    np.full(kj.size, -1), ds))

            # ---- panels with the point at a corner
            if np.any(~normal):
                q = np.flatnonzero(~normal)
                p, dq, cq = pid[q], depth[q], corner[q]
                a0, a1, c0, c1 = u0[q], u1[q], v0[q], v1[q]
                ok = self._aspect(region, a0, a1, c0, c1) <= 2.0
                dx = self._singular_distance(x0[p], x1[p], region, a0, a1, c0, c1)
                if dx is not None:
                    _, diam = self._distance(region, x0[p], x1[p], xu[p], xv[p], a0, a1, c0, c1)
                    ok &= dx > self.far_ratio * diam
                exhausted = ~ok & (dq >= self.max_depth)
                self.depth_exhausted += int(exhausted.sum())
                ok |= exhausted
                if np.any(ok):
                    self._duffy(region, out, x0, x1, p[ok], a0[ok], a1[ok], c0[ok], c1[ok], cq[ok])
                bad = ~ok
                if np.any(bad):
                    nxt.extend(self._split_corner(store, p[bad], a0[bad], a1[bad], c0[bad], c1[bad],
                                                  cq[bad], dq[bad] + 1))

            if not nxt:
                break
            pid, pan, u0, u1, v0, v1, corner, depth = (np.concatenate(col) for col in zip(*nxt))
        return out

    def _split_corner(self, store, p, a0, a1, c0, c1, corner, d):
        """Split a corner panel: quarter it, or halve the long side when elongated.

        The child holding the singular corner stays a corner panel; the others
        are ordinary panels registered in the store.
        """
        region = store.region
        pieces = []
        asp = self._aspect(region, a0, a1, c0, c1)
        long_u = (a1 - a0) > (0.5 * (a0 + a1) * (c1 - c0) if region.polar else (c1 - c0))
        am, cm = 0.5 * (a0 + a1), 0.5 * (c0 + c1)
        quarter = asp <= 2.0
        halve_u = ~quarter & long_u
        halve_v = ~quarter & ~long_u
        # (selector, lo_u, hi_u, lo_v, hi_v, corner indices that this child holds)
        children = [
            (quarter, a0, am, c0, cm, (0,)), (quarter, am, a1, c0, cm, (1,)),
            (quarter, am, a1, cm, c1, (2,)), (quarter, a0, am, cm, c1, (3,)),
            (halve_u, a0, am, c0, c1, (0, 3)), (halve_u, am, a1, c0, c1, (1, 2)),
            (halve_v, a0, a1, c0, cm, (0, 1)), (halve_v, a0, a1, cm, c1, (2, 3)),
        ]
        for sel, lu, hu, lv, hv, held in children:
            if not np.any(sel):
                continue
            cs = corner[sel]
            holds = np.isin(cs, held)
            ps, ds = p[sel], d[sel]
            lu, hu, lv, hv = lu[sel], hu[sel], lv[sel], hv[sel]
            if np.any(holds):
                h = holds
                pieces.append((ps[h], np.full(int(h.sum()), -1), lu[h], hu[h], lv[h], hv[h], cs[h], ds[h]))
            if np.any(~holds):
                h = ~holds
                ids = store.add(lu[h], hu[h], lv[h], hv[h])
                pieces.append((ps[h], ids, lu[h], hu[h], lv[h], hv[h], np.full(ids.size, -1), ds[h]))
        return pieces
