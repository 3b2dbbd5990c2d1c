"""Periodic domains, straightening charts, renormalization and nested returns.

At depth n (period R = 2^n) every point p of the return domain is given the
Hénon-form coordinates (X, Y) = (pi_x F^{R-1}(p), p_y).  Level sets of X are
the vertical leaves (they are contracted by DF^R at the rate b^R), horizontal
leaves are genuine horizontals, and in these coordinates the return reads
exactly (X, Y) -> (g(X, Y), X).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import shapely
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize_scalar

from .cascade import Cascade, find_cascade  # noqa: F401  (re-exported)
from .errors import (FoliationIntegrationFailed, NewtonDiverged, NoPeriodicDomain,
                     NotAGraph, ShapeTestFailed)
from .geometry import (Chart, Curve, GraphFit, Rect, fit_horizontal_graph,
                       fit_vertical_graph)
from .henon import (HenonLikeMap, UnimodalProfile, count_turns,
                    most_contracting_direction, profile_from_function)

_GL_T, _GL_W = leggauss(16)


# ---------------------------------------------------------------- level charts

class LevelChart:
    """Hénon-form coordinates of the depth with return time R."""

    def __init__(self, F, R: int, ref):
        self.F = F
        self.R = int(R)
        self.ref = np.asarray(ref, float)
        self.slope = 0.0
        if self.R > 1:
            _, g = self.grad_phi1(self.ref)
            self.slope = -g[1] / g[0]

    def phi1(self, p):
        p = np.asarray(p, float)
        if self.R == 1:
            return p[..., 0].copy()
        return self.F.iterate_points(p, self.R - 1)[..., 0]

    def grad_phi1(self, p):
        """Value and gradient of pi_x F^{R-1}."""
        p = np.asarray(p, float)
        q, J = self.F.cocycle(p, self.R - 1)
        return q[..., 0], J[..., 0, :]

    def leaf_x(self, X, y, x0=None, tol=1e-15, maxiter=60):
        """x with pi_x F^{R-1}(x, y) = X on the branch through ``ref``."""
        X, y = np.broadcast_arrays(np.asarray(X, float), np.asarray(y, float))
        X, y = np.array(X), np.array(y)
        if self.R == 1:
            return X.copy()
        x = self.ref[0] + self.slope * (y - self.ref[1]) if x0 is None else np.array(x0, float)
        x = np.array(np.broadcast_to(x, X.shape), dtype=float)
        ok = np.zeros(X.shape, bool)
        for it in range(maxiter):
            v, g = self.grad_phi1(np.stack([x, y], -1))
            step = (v - X) / g[..., 0]
            x = x - step
            ok = np.abs(step) <= tol * np.maximum(1.0, np.abs(x)) * 8
            if np.all(ok | ~np.isfinite(x)):
                break
        x = np.where(ok & np.isfinite(x), x, np.nan)
        return x

    def leaf_slope(self, p):
        _, g = self.grad_phi1(p)
        return -g[..., 1] / g[..., 0]

    def to_henon(self, p):
        p = np.asarray(p, float)
        return np.stack([self.phi1(p), p[..., 1]], -1)

    def from_henon(self, Z):
        Z = np.asarray(Z, float)
        return np.stack([self.leaf_x(Z[..., 0], Z[..., 1]), Z[..., 1]], -1)

    def return_henon(self, Z):
        """The return F^R written in Hénon-form coordinates."""
        p = self.from_henon(Z)
        return self.to_henon(self.F.iterate_points(p, self.R))


class CenteredChart:
    """Exact straightening chart centered at ``center`` with unit-speed axes.

    X is the horizontal arc length from the center to the leaf of p, Y is the
    arc length along the center leaf up to the height of p.
    """

    def __init__(self, level: LevelChart, center):
        self.level = level
        self.center = np.asarray(center, float)
        self.c0 = float(level.phi1(self.center))

    def _center_leaf_x(self, y):
        x0 = self.center[0] + self.level.slope * (y - self.center[1])
        return self.level.leaf_x(np.full(np.shape(y), self.c0), y, x0=x0)

    def _speed(self, y):
        x = self._center_leaf_x(y)
        s = self.level.leaf_slope(np.stack([x, y], -1)) if self.level.R > 1 else np.zeros_like(y)
        return np.sqrt(1.0 + s * s)

    def phi2(self, y):
        y = np.asarray(y, float)
        y0 = self.center[1]
        h = 0.5 * (y - y0)
        nodes = y0 + h[..., None] * (1.0 + _GL_T)
        return h * np.sum(_GL_W * self._speed(nodes), axis=-1)

    def phi2_inv(self, Y):
        Y = np.asarray(Y, float)
        y = self.center[1] + Y
        for _ in range(30):
            step = (self.phi2(y) - Y) / self._speed(y)
            y = y - step
            if np.all(np.abs(step) < 1e-16 * np.maximum(1.0, np.abs(y)) * 4):
                break
        return y

    def apply(self, p):
        p = np.asarray(p, float)
        X = self.level.phi1(p)
        xi = self.level.leaf_x(X, np.full(X.shape, self.center[1]),
                               x0=p[..., 0] - self.level.slope * (p[..., 1] - self.center[1]))
        return np.stack([xi - self.center[0], self.phi2(p[..., 1])], -1)

    def invert(self, z):
        z = np.asarray(z, float)
        y = self.phi2_inv(z[..., 1])
        xa = self.center[0] + z[..., 0]
        X = self.level.phi1(np.stack([xa, np.full(xa.shape, self.center[1])], -1))
        x = self.level.leaf_x(X, y, x0=xa + self.level.slope * (y - self.center[1]))
        return np.stack([x, y], -1)


def integrate_leaf(F, R: int, p, y_end: float, n_steps: int = 64, m: Optional[int] = None):
    """RK4 integral curve of the most contracting direction field of DF^R.

    The leaf is followed in y from p to height ``y_end``; it is the sampled
    counterpart of the level-set leaves used by the charts.
    """
    m = R if m is None else m

    def slope(x, y):
        d = most_contracting_direction(F, (x, y), m).direction.vector
        if abs(d[1]) < 1e-12:
            raise FoliationIntegrationFailed("leaf turned horizontal")
        return d[0] / d[1]

    x, y = map(float, p)
    h = (y_end - y) / n_steps
    pts = [(x, y)]
    for _ in range(n_steps):
        k1 = slope(x, y)
        k2 = slope(x + 0.5 * h * k1, y + 0.5 * h)
        k3 = slope(x + 0.5 * h * k2, y + 0.5 * h)
        k4 = slope(x + h * k3, y + h)
        x += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        y += h
        pts.append((x, y))
    return Curve.from_samples(pts)


# ---------------------------------------------------------------- domains

@dataclass(eq=False)
class PeriodicDomain:
    period: int
    region: List[Curve]          # bottom, right, top, left (counterclockwise)
    margin: float
    disjointness_ok: bool
    level: LevelChart = field(repr=False)
    I_X: tuple = (0.0, 0.0)
    I_Y: tuple = (0.0, 0.0)
    fixed_point: np.ndarray = field(default=None, repr=False)  # P of period R/2 on the boundary
    crit_X: float = float("nan")
    separation: float = float("nan")
    parent: Optional["PeriodicDomain"] = field(default=None, repr=False)

    @property
    def polygon(self):
        return shapely.Polygon(self.boundary_points())

    def boundary_points(self):
        return np.concatenate([c.samples[:-1] for c in self.region])

    def to_henon(self, p):
        return self.level.to_henon(p)

    def from_henon(self, Z):
        return self.level.from_henon(Z)

    def contains(self, p, rel_tol=0.0):
        """Exact membership through the level chart (branch checked)."""
        p = np.asarray(p, float)
        Z = self.level.to_henon(p)
        wx = self.I_X[1] - self.I_X[0]
        wy = self.I_Y[1] - self.I_Y[0]
        inside = ((Z[..., 0] > self.I_X[0] - rel_tol * wx) & (Z[..., 0] < self.I_X[1] + rel_tol * wx)
                  & (Z[..., 1] > self.I_Y[0] - rel_tol * wy) & (Z[..., 1] < self.I_Y[1] + rel_tol * wy))
        if np.any(inside):
            x = self.level.leaf_x(Z[..., 0], Z[..., 1])
            xw = self.x_width()
            same = np.abs(x - p[..., 0]) < 1e-6 * xw
            inside &= same
        return inside

    def x_width(self):
        pts = self.boundary_points()
        return float(np.ptp(pts[:, 0]))

    def sample(self, n_boundary=256, n_probe=24):
        """Boundary samples and an interior probe grid in phase space."""
        bd = self.boundary_points()
        u = np.linspace(0, 1, n_probe + 2)[1:-1]
        X = self.I_X[0] + u * (self.I_X[1] - self.I_X[0])
        Y = self.I_Y[0] + u * (self.I_Y[1] - self.I_Y[0])
        ZZ = np.stack(np.meshgrid(X, Y, indexing="ij"), -1).reshape(-1, 2)
        return bd, self.level.from_henon(ZZ)

    def boundary_dict(self):
        return {"period": self.period, "margin": self.margin, "disjointness_ok": self.disjointness_ok,
                "separation": self.separation, "I_X": list(self.I_X), "I_Y": list(self.I_Y),
                "boundary": [c.to_dict() for c in self.region]}


def periodic_point(F, p, k: int, tol=1e-14, maxiter=50):
    """Newton for F^k(p) = p; returns (p, DF^k(p))."""
    p = np.asarray(p, float).copy()
    for _ in range(maxiter):
        q, J = F.cocycle(p, k)
        step = np.linalg.solve(J - np.eye(2), q - p)
        p = p - step
        if not np.all(np.isfinite(p)):
            raise NewtonDiverged("periodic point Newton diverged")
        if np.max(np.abs(step)) < tol * max(1.0, np.max(np.abs(p))):
            break
    q, J = F.cocycle(p, k)
    return p, J


def _identity_domain(F) -> PeriodicDomain:
    c = np.array([np.mean(F.domain.h_interval), np.mean(F.domain.v_interval)])
    return PeriodicDomain(1, [], 0.0, True, LevelChart(F, 1, c),
                          F.domain.h_interval, F.domain.v_interval)


def _profile_crit(F, parent: PeriodicDomain, Y: float):
    if parent.period == 1:
        prof = profile_from_function(lambda x: F.f(x, np.full_like(x, Y)), F.domain.h_interval)
        return prof.critical_point
    return parent.crit_X


def _roots(fn, lo, hi, n=801):
    xs = np.linspace(lo, hi, n)
    vals = fn(xs)
    out = []
    for k in range(n - 1):
        if np.isfinite(vals[k]) and np.isfinite(vals[k + 1]) and vals[k] * vals[k + 1] < 0:
            out.append(brentq(lambda t: float(fn(np.array([t]))[0]), xs[k], xs[k + 1], xtol=1e-15))
    return out


def find_periodic_domain(F, R: int, parent: Optional[PeriodicDomain] = None,
                         delta: float = 0.02, eta: float = 0.1,
                         n_boundary: int = 256, n_probe: int = 24) -> PeriodicDomain:
    """Construct and verify an R-periodic domain (R a power of 2).

    The boundary point P is the orientation-reversing fixed point of F^{R/2}
    in the parent domain.  The vertical sides are the leaves X = q and
    X = X2 (shrunk by ``delta``), q the X-coordinate of P and X2 its partner
    with g(X2) = g(q); the height is the same interval enlarged by ``eta``.
    """
    if R < 2 or R & (R - 1):
        raise ValueError("R must be a power of 2, at least 2")
    if parent is None:
        parent = _identity_domain(F) if R == 2 else find_periodic_domain(F, R // 2, None, delta, eta,
                                                                           n_boundary, n_probe)
    if parent.period != R // 2:
        raise ValueError("parent period must be R/2")
    half = R // 2
    plev = parent.level

    # boundary periodic point: fixed point of the parent return, X = Y
    def h(X):
        Z = np.stack([X, X], -1)
        return plev.return_henon(Z)[..., 0] - X if half > 1 else F.f(X, X) - X

    roots = _roots(h, *parent.I_X)
    P = None
    for X in roots:
        p0 = plev.from_henon(np.array([X, X]))
        if not np.all(np.isfinite(p0)):
            continue
        try:
            p, J = periodic_point(F, p0, half)
        except (NewtonDiverged, np.linalg.LinAlgError):
            continue
        ev = np.linalg.eigvals(J)
        if np.all(np.isreal(ev)) and np.min(np.real(ev)) < -1.0:
            P = p
            break
    if P is None:
        raise NoPeriodicDomain(f"no flipped orientation-reversing period-{half} point",
                               condition="construction", iterate=half)

    level = LevelChart(F, R, P)
    q = float(level.phi1(P))

    def g(X):
        X = np.asarray(X, float)
        return level.return_henon(np.stack([X, np.full(X.shape, q)], -1))[..., 0]

    c0 = _profile_crit(F, parent, q)
    w = abs(q - c0)
    lo, hi = c0 - 1.25 * w, c0 + 1.25 * w
    xs = np.linspace(lo, hi, 801)
    with np.errstate(all="ignore"):
        gv = g(xs)
    good = np.isfinite(gv)
    if good.sum() < 10:
        raise NoPeriodicDomain("return profile could not be evaluated", condition="construction", iterate=R)
    k = int(np.nanargmax(np.abs(np.where(good, gv - q, np.nan))))
    sgn = 1.0 if gv[k] > q else -1.0
    k = min(max(k, 1), len(xs) - 2)
    res = minimize_scalar(lambda t: -sgn * float(g(np.array([t]))[0]),
                          bounds=(xs[k - 1], xs[k + 1]), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, abs(xs[k]))})
    c = float(res.x)
    far = 2 * c - q
    side = np.linspace(c, c + 1.6 * (far - c), 401)
    with np.errstate(all="ignore"):
        sv = g(side) - q
    X2 = None
    for j in range(1, len(side)):
        if np.isfinite(sv[j - 1]) and np.isfinite(sv[j]) and sv[j - 1] * sv[j] <= 0:
            X2 = brentq(lambda t: float(g(np.array([t]))[0]) - q, side[j - 1], side[j], xtol=1e-15)
            break
    if X2 is None:
        raise NoPeriodicDomain("no partner of the boundary leaf", condition="construction", iterate=R)
    a0, a1 = sorted((q, X2))
    wI = a1 - a0
    I_X = (a0 + delta * wI, a1 - delta * wI)
    I_Y = (a0 - eta * wI, a1 + eta * wI)

    region = _region_curves(level, I_X, I_Y, n_boundary // 4 * 4 // 4 or 64)
    dom = PeriodicDomain(R, region, 0.0, False, level, I_X, I_Y, P, c, parent=parent)
    _verify(F, dom, n_boundary, n_probe)
    return dom


def _region_curves(level, I_X, I_Y, n):
    n = max(n, 64)
    ys = np.linspace(*I_Y, n)
    xs_leaf = lambda X: level.leaf_x(np.full(n, X), ys)
    left_x, right_x = xs_leaf(I_X[0]), xs_leaf(I_X[1])
    if not (np.all(np.isfinite(left_x)) and np.all(np.isfinite(right_x))):
        raise FoliationIntegrationFailed("boundary leaf could not be traced")
    # in phase space the leaf with larger X may lie to the left; order by x
    if np.mean(left_x) > np.mean(right_x):
        left_x, right_x = right_x, left_x
        XL, XR = I_X[1], I_X[0]
    else:
        XL, XR = I_X[0], I_X[1]
    t = np.linspace(0, 1, n)
    Xb = XL + t * (XR - XL)
    bottom = level.from_henon(np.stack([Xb, np.full(n, I_Y[0])], -1))
    top = level.from_henon(np.stack([Xb[::-1], np.full(n, I_Y[1])], -1))
    right = np.stack([right_x, ys], -1)
    left = np.stack([left_x[::-1], ys[::-1]], -1)
    return [Curve.from_samples(c) for c in (bottom, right, top, left)]


def _verify(F, dom: PeriodicDomain, n_boundary: int, n_probe: int):
    R = dom.period
    bd, probe = dom.sample(n_boundary, n_probe)
    poly = dom.polygon
    ring = poly.exterior
    # containment F^R(B) inside B
    img_bd = F.iterate_points(bd, R)
    img_pr = F.iterate_points(probe, R)
    inside = dom.contains(np.concatenate([img_bd, img_pr]))
    if not np.all(inside):
        bad = int(np.count_nonzero(~inside))
        raise NoPeriodicDomain(f"F^{R}(B) not inside B ({bad} sampled escapes)",
                               condition="containment", iterate=R)
    dom.margin = float(np.min(shapely.distance(ring, shapely.points(img_bd))))
    if not dom.margin > 0:
        raise NoPeriodicDomain("zero containment margin", condition="containment", iterate=R)
    # disjointness of F^i(B), 1 <= i < R
    sep = np.inf
    cur_bd, cur_pr = bd, probe
    for i in range(1, R):
        cur_bd, cur_pr = F(cur_bd), F(cur_pr)
        line = shapely.LineString(np.vstack([cur_bd, cur_bd[:1]]))
        d = float(shapely.distance(line, poly))
        hit = np.any(dom.contains(np.concatenate([cur_bd, cur_pr])))
        if hit or d <= 0:
            dom.separation = 0.0
            raise NoPeriodicDomain(f"F^{i}(B) meets B", condition="disjointness", iterate=i)
        sep = min(sep, d)
    dom.separation = float(sep) if R > 1 else float("inf")
    dom.disjointness_ok = True


# ---------------------------------------------------------------- returns

@dataclass(eq=False)
class HenonReturn:
    domain: PeriodicDomain
    chart: Chart
    renormalized_profile: UnimodalProfile
    exact: CenteredChart = field(repr=False)

    @property
    def period(self):
        return self.domain.period

    @property
    def level(self):
        return self.domain.level

    def target(self) -> Rect:
        return self.chart.target

    def return_in_chart(self, z):
        """Psi o F^R o Psi^{-1}."""
        p = self.exact.invert(z)
        return self.exact.apply(self.level.F.iterate_points(p, self.period))


def _chart_target(exact: CenteredChart, dom: PeriodicDomain) -> Rect:
    lev = dom.level
    y0 = exact.center[1]
    xa = lev.leaf_x(np.array(dom.I_X), np.full(2, y0))
    X = np.sort(xa - exact.center[0])
    Y = np.sort(exact.phi2(np.array(dom.I_Y)))
    return Rect(tuple(X), tuple(Y))


def shape_test(ret: HenonReturn, n_lines: int = 20, n_samples: int = 128):
    """Images of horizontal chart lines are vertical graphs; profile unimodal."""
    T = ret.chart.target
    ys = np.linspace(*T.v_interval, n_lines + 2)[1:-1]
    xs = np.linspace(*T.h_interval, n_samples)
    for y in ys:
        z = np.stack([xs, np.full_like(xs, y)], -1)
        img = ret.return_in_chart(z)
        try:
            fit_vertical_graph(Curve.from_samples(img))
        except NotAGraph as exc:
            raise ShapeTestFailed(f"image of horizontal line y={y!r} is not a vertical graph") from exc
    if count_turns(ret.renormalized_profile.ys) != 1:
        raise ShapeTestFailed("return profile is not unimodal")


def build_straightening_chart(F, domain: PeriodicDomain, center=None, m: int = 129,
                              check_shape: bool = True) -> HenonReturn:
    lev = domain.level
    if center is None:
        Zc = np.array([np.mean(domain.I_X), np.mean(domain.I_Y)])
        center = lev.from_henon(Zc)
    exact = CenteredChart(lev, center)
    target = _chart_target(exact, domain)
    chart = Chart.from_inverse(exact.invert, target, m, center=tuple(exact.center))
    if not np.all(np.isfinite(chart.grid)):
        raise FoliationIntegrationFailed("chart grid has unresolved leaves")
    q = float(lev.phi1(domain.fixed_point))
    prof = profile_from_function(
        lambda X: lev.return_henon(np.stack([X, np.full_like(X, q)], -1))[..., 0],
        domain.I_X, 513)
    ret = HenonReturn(domain, chart, prof, exact)
    if check_shape:
        shape_test(ret)
    return ret


def recenter(F, ret: HenonReturn, center, m: Optional[int] = None) -> HenonReturn:
    return build_straightening_chart(F, ret.domain, center, m or ret.chart.m, check_shape=False)


# ---------------------------------------------------------------- renormalize

@dataclass(frozen=True)
class Rescaling:
    """Affine map Z -> k (Z - m (1, 1)) applied to both Hénon coordinates."""
    k: float
    m: float

    def __call__(self, Z):
        return self.k * (np.asarray(Z, float) - self.m)

    def inv(self, Z):
        return np.asarray(Z, float) / self.k + self.m


def rescaling_for(ret_or_domain, reference_width: float) -> Rescaling:
    dom = getattr(ret_or_domain, "domain", ret_or_domain)
    lev = dom.level
    mid = 0.5 * (dom.I_X[0] + dom.I_X[1])
    k = reference_width / (dom.I_X[1] - dom.I_X[0])
    q = float(lev.phi1(dom.fixed_point))
    # orient so that the rescaled profile has a maximum
    gq = lev.return_henon(np.array([dom.crit_X, q]))[0]
    if gq < q:
        k = -k
    return Rescaling(k, mid)


def renormalize(ret, reference_width: Optional[float] = None) -> HenonLikeMap:
    """Affinely rescaled Hénon-form return as an evaluator-backed map.

    ``ret`` may be a HenonReturn or a bare PeriodicDomain; the chart is not
    needed for the rescaled map itself.
    """
    dom = getattr(ret, "domain", ret)
    lev = dom.level
    F = lev.F
    W = F.domain.width if reference_width is None else reference_width
    A = rescaling_for(dom, W)

    def f(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        Z = A.inv(np.stack([x, y], -1))
        return A(lev.return_henon(Z))[..., 0]

    ys = np.sort(A(np.array(dom.I_Y)))
    G = HenonLikeMap(profile=f, domain=Rect((-W / 2, W / 2), tuple(ys)))
    object.__setattr__(G, "_rescaling", A)
    object.__setattr__(G, "_source", ret)
    return G


# ---------------------------------------------------------------- sequences

@dataclass(eq=False)
class RenormSequence:
    returns: List[HenonReturn]
    periods: List[int]
    ratios: List[int]
    bound_b: int
    grouping: int = 1
    base_depth: int = 1
    F: HenonLikeMap = field(default=None, repr=False)
    error: Optional[Exception] = field(default=None, repr=False)

    @property
    def depth(self):
        return len(self.returns)

    def ret(self, n: int) -> HenonReturn:
        """Return at (ungrouped) depth n >= 1."""
        return self.returns[n - 1]

    @property
    def exposed_depths(self):
        g = self.grouping
        return [k * g for k in range(1, self.depth // g + 1)]

    @property
    def exposed_periods(self):
        return [self.periods[n - 1] for n in self.exposed_depths]

    @property
    def exposed_ratios(self):
        p = self.exposed_periods
        return [p[k + 1] // p[k] for k in range(len(p) - 1)]

    def nesting_margins(self, n_samples: int = 256):
        """Smallest membership slack of sampled boundary of B^{n+1} in B^n."""
        out = []
        for n in range(1, self.depth):
            inner, outer = self.ret(n + 1).domain, self.ret(n).domain
            pts = inner.boundary_points()
            ok = bool(np.all(outer.contains(pts)))
            d = float(np.min(shapely.distance(outer.polygon.exterior, shapely.points(pts))))
            out.append(d if ok else -d)
        return out

    def recenter(self, center):
        self.returns = [recenter(self.F, r, center) for r in self.returns]

    def to_dict(self):
        return {"periods": self.periods, "ratios": self.ratios, "grouping": self.grouping,
                "bound_b": self.bound_b, "base_depth": self.base_depth,
                "returns": [{"chart": r.chart.to_dict(), "domain": r.domain.boundary_dict(),
                             "margin": r.domain.margin} for r in self.returns]}


def nested_returns(F, N: int, grouping: int = 1, m: int = 129, base_depth: int = 1,
                   strict: bool = False, **domain_kw) -> RenormSequence:
    """Returns at depths 1..N of a doubling cascade; partial on failure."""
    returns = []
    parent = None
    err = None
    for n in range(1, N + 1):
        try:
            dom = find_periodic_domain(F, 2 ** n, parent, **domain_kw)
            returns.append(build_straightening_chart(F, dom, m=m))
        except Exception as exc:  # partial sequence is part of the contract
            if strict or n == 1:
                raise
            err = exc
            break
        parent = dom
    periods = [r.period for r in returns]
    ratios = [periods[k + 1] // periods[k] for k in range(len(periods) - 1)]
    seq = RenormSequence(returns, periods, ratios, max(ratios, default=2), grouping, base_depth, F, err)
    return seq


def graph_transform_horizontal(F, curve: Curve, chart_src: Optional[Chart], chart_dst: Optional[Chart],
                               n: int) -> GraphFit:
    """Push a horizontal graph forward n steps and refit it in ``chart_dst``."""
    fit_horizontal_graph(curve, chart_src)
    pts = F.iterate_points(np.asarray(curve.samples), n)
    return fit_horizontal_graph(Curve.from_samples(pts), chart_dst)
