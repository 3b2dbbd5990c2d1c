"""Critical value, valuable charts, first-entry maps and quadratic factorization.

At depth N the critical value v0 is the tip of the fold F^{R_N}(I^N_0), where
I^N_0 is the genuine horizontal through v0 itself: in Hénon-form coordinates
the tip sits at the critical point c of X -> g(X, Y0), and the self-consistency
Y0 = c fixes the horizontal.  The chart vertical at v0 is then the image of
the horizontal direction at v_{-R_N}, which is the finite-depth defining
condition.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import shapely
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (DegenerateCurve, EmptyIntersection, NegativeCurvature, NoConvergence, NoTangency,
                     NormalFormResidualTooLarge, NotCauchy, NotMonotone, NotSingleCritical)
from .geometry import CURV_FLOOR, Chart, Curve, DirectionP, Point2, Rect, arc_length_parameterize
from .henon import center_direction, strong_stable_direction
from .renorm import CenteredChart, RenormSequence

NF_TOL = 1e-4
GAP_FLOOR = 1e-12


# ---------------------------------------------------------------- sampled maps

@dataclass(frozen=True, eq=False)
class SampledMap:
    """A real function on an interval, kept as samples with a cubic interpolant."""
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_spl", CubicSpline(self.xs, self.ys))

    def __call__(self, x, nu=0):
        return self._spl(x, nu)

    @property
    def interval(self):
        return float(self.xs[0]), float(self.xs[-1])

    def to_dict(self):
        return {"xs": [float(v) for v in self.xs], "ys": [float(v) for v in self.ys]}


def _as_callable(f, interval=None, n=2049):
    if isinstance(f, SampledMap):
        return f, f.interval
    if callable(f):
        if interval is None:
            raise ValueError("an interval is required for a callable")
        return f, interval
    xs, ys = f
    sm = SampledMap(np.asarray(xs, float), np.asarray(ys, float))
    return sm, sm.interval


# ---------------------------------------------------------------- factorization

def second_derivative_at_zero(f, scale):
    h = 1e-2 * scale
    return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)


def quadratic_factorize(f, interval=None, n: int = 2049):
    """Write f = kappa * psi^2 with kappa = f''(0) and psi(x) = sign(x) sqrt(f/kappa).

    ``f`` is a callable (with ``interval``), a SampledMap or an (xs, ys) pair;
    it must vanish to second order at 0.  Returns (psi as SampledMap, kappa).
    """
    fn, (lo, hi) = _as_callable(f, interval)
    if not lo < 0 < hi:
        raise ValueError("interval must contain 0 in its interior")
    scale = min(-lo, hi)
    kappa = float(second_derivative_at_zero(lambda t: float(fn(t)), scale))
    if not kappa > CURV_FLOOR:
        raise NegativeCurvature(f"f''(0) = {kappa!r}", kappa=kappa)
    xs = np.linspace(lo, hi, n)
    # 0 must be a node; drop grid nodes that nearly coincide with it
    xs = xs[np.abs(xs) > 1e-3 * (hi - lo) / n]
    xs = np.sort(np.append(xs, 0.0))
    ys = np.asarray(fn(xs), float)
    ys[xs == 0] = 0.0
    d = np.diff(ys)
    turns = np.flatnonzero(np.sign(d[1:]) != np.sign(d[:-1]))
    if len(turns) != 1 or np.any(ys < -1e-14 * np.max(np.abs(ys))):
        raise NotSingleCritical("f has another sampled critical point or changes sign")
    psi = np.sign(xs) * np.sqrt(np.maximum(ys, 0.0) / kappa)
    if np.any(np.diff(psi) <= 0):
        raise NotSingleCritical("psi is not strictly monotone")
    return SampledMap(xs, psi), kappa


def factor_residual(f, psi: SampledMap, kappa: float, a: float = 0.0) -> float:
    ys = np.asarray(f(psi.xs), float) if callable(f) else np.asarray(f[1], float)
    return float(np.max(np.abs(ys - (kappa * psi.ys ** 2 + a))))


# ---------------------------------------------------------------- critical value

@dataclass(eq=False)
class CriticalData:
    v0: Point2
    v_minus1: Point2
    E_ss: DirectionP
    E_c: DirectionP
    tangency_residual: float
    cauchy_gaps: list
    depth: int = 0
    orbit_start: np.ndarray = field(default=None, repr=False)   # v_{-R_N}
    per_depth: list = field(default_factory=list, repr=False)   # v0 located at each depth
    invariance_angle: float = float("nan")
    ss_angle: float = float("nan")   # chart vertical vs. numerically converged E^ss

    def to_dict(self):
        return {"v0": list(self.v0), "v_minus1": list(self.v_minus1),
                "E_ss": self.E_ss.angle, "E_c": self.E_c.angle,
                "tangency_residual": self.tangency_residual, "cauchy_gaps": self.cauchy_gaps,
                "depth": self.depth, "invariance_angle": self.invariance_angle,
                "ss_angle": self.ss_angle}


def _tip(domain, Y0):
    """Critical point X of g(., Y0) near the stored one, by a derivative root."""
    lev = domain.level
    F = lev.F
    R = lev.R

    def dg(X):
        p = lev.from_henon(np.array([X, Y0]))
        with np.errstate(over="ignore", invalid="ignore"):
            q, J = F.cocycle(p, R)
        _, grad = lev.grad_phi1(q)
        return float(grad @ J @ np.array([1.0, 0.0]))

    c = domain.crit_X
    w = 0.05 * (domain.I_X[1] - domain.I_X[0])
    for k in range(8):
        lo, hi = c - w, c + w
        if dg(lo) * dg(hi) < 0:
            return brentq(dg, lo, hi, xtol=1e-15, rtol=1e-15)
        w *= 2
    raise NoTangency("tangent-angle functional has no sign change", depth=R)


def critical_value_at(domain, maxiter: int = 20):
    """(v_{-R}, c) with v_{-R} on the horizontal Y0 = c through the fold tip."""
    Y0 = domain.crit_X
    for _ in range(maxiter):
        c = _tip(domain, Y0)
        if abs(c - Y0) <= 1e-15 * max(1.0, abs(c)):
            break
        Y0 = c
    start = domain.level.from_henon(np.array([c, c]))
    return start, c


def _tangency_fit(domain, start, v0, window_frac: float = 0.05, n: int = 201):
    """Relative residual of a c t^2 fit to the fold-vs-leaf separation near v0."""
    lev = domain.level
    F, R = lev.F, lev.R
    bd = domain.boundary_points()
    width = float(np.ptp(bd[:, 0]))
    tmax = window_frac * width
    X0 = float(lev.phi1(start))
    Xv = float(lev.phi1(v0))
    # the image point's height above v0 equals X - X0 (second Hénon coordinate)
    Xs = X0 + np.linspace(-tmax, tmax, n)
    pts = F.iterate_points(lev.from_henon(np.stack([Xs, np.full(n, start[1])], -1)), R)
    leaf = lev.leaf_x(np.full(n, Xv), pts[:, 1])
    sep = pts[:, 0] - leaf
    t = pts[:, 1] - v0[1]
    A = t ** 2
    coef = float(A @ sep / (A @ A))
    res = float(np.linalg.norm(sep - coef * A) / np.linalg.norm(sep))
    return res, coef


def locate_critical_value(seq: RenormSequence, depth: Optional[int] = None) -> CriticalData:
    """Critical value and point at the deepest return, with Cauchy gaps over depths."""
    N = seq.depth if depth is None else depth
    if N < 2:
        raise ValueError("critical value needs depth >= 2")
    F = seq.F
    per = []
    for n in range(1, N + 1):
        dom = seq.ret(n).domain
        start, _ = critical_value_at(dom)
        R = dom.period
        orb = F.orbit_points(start, R)
        per.append((start, orb[R - 1], orb[R]))
    start, vm1, v0 = per[-1]
    gaps = [float(np.hypot(*(per[k][2] - per[k + 1][2]))) for k in range(N - 1)]
    live = [g for g in gaps if g > GAP_FLOOR]
    if any(live[k + 1] >= live[k] for k in range(len(live) - 1)):
        warnings.warn(NotCauchy("critical value gaps fail to decrease"))
    dom = seq.ret(N).domain
    lev = dom.level
    R = dom.period
    e_v = DirectionP.from_vector([lev.leaf_slope(v0), 1.0])
    _, J1 = F.cocycle(start, R - 1)
    e_c_vec = J1 @ np.array([1.0, 0.0])
    E_c = DirectionP.from_vector(e_c_vec)
    E_img = DirectionP.from_vector(F.jacobian(vm1) @ e_c_vec)
    inv_angle = E_img.distance(e_v)
    try:
        ss = strong_stable_direction(F, v0).direction
        ss_angle = ss.distance(e_v)
    except Exception:
        ss_angle = float("nan")
    res, _ = _tangency_fit(dom, start, v0)
    return CriticalData(Point2(*v0), Point2(*vm1), e_v, E_c, res, gaps, N, start,
                        [tuple(p[2]) for p in per], inv_angle, ss_angle)


# ---------------------------------------------------------------- valuable charts

class ReflectedChart:
    """Compose an exact chart with x -> sigma x."""

    def __init__(self, base, sigma: float):
        self.base = base
        self.sigma = float(sigma)
        self.center = getattr(base, "center", None)

    def apply(self, p):
        z = self.base.apply(p)
        return np.stack([self.sigma * z[..., 0], z[..., 1]], -1)

    def invert(self, z):
        z = np.asarray(z, float)
        return self.base.invert(np.stack([self.sigma * z[..., 0], z[..., 1]], -1))


class TranslationChart:
    """p -> p - center; the trivial genuine-horizontal chart."""

    def __init__(self, center):
        self.center = np.asarray(center, float)

    def apply(self, p):
        return np.asarray(p, float) - self.center

    def invert(self, z):
        return np.asarray(z, float) + self.center


class CriticalChart:
    """Chart near v_{-1} that puts F into the normal form (f0(x) - lam y, x).

    For lam > 0 it is the pullback N^{-1} o Phi0 o F with N the normal form;
    for lam = 0 the second coordinate is the height above the graph of the
    section through v_{-1}.
    """

    def __init__(self, F, phi0, f0: SampledMap, lam: float, section: Optional[SampledMap] = None):
        self.F, self.phi0, self.f0, self.lam, self.section = F, phi0, f0, lam, section

    def _section_y(self, x):
        """Height of the section over x: with b = 0 every image point lies on
        {(f(t), t)}, so solve f(t) = x from the sampled guess."""
        x = np.asarray(x, float)
        t = np.array(self.section(x), float)
        for _ in range(30):
            q = np.stack([t, np.zeros_like(t)], -1)
            step = (self.F.f(t, np.zeros_like(t)) - x) / self.F.jacobian(q)[..., 0, 0]
            t = t - step
            if np.all(np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(t))):
                break
        return t

    def apply(self, p):
        p = np.asarray(p, float)
        u = self.phi0.apply(self.F(p))
        x = u[..., 1]
        if self.lam > 0:
            y = (self.f0(x) - u[..., 0]) / self.lam
        else:
            y = p[..., 1] - self._section_y(p[..., 0])
        return np.stack([x, y], -1)

    def invert(self, z):
        z = np.asarray(z, float)
        x, y = z[..., 0], z[..., 1]
        if self.lam > 0:
            w = self.phi0.invert(np.stack([self.f0(x) - self.lam * y, x], -1))
            return self.F.inverse(w)
        # lam = 0: the first chart coordinate only sees p_x through F
        w = self.phi0.invert(np.stack([self.f0(x), x], -1))
        px = w[..., 1]
        return np.stack([px, y + self._section_y(px)], -1)


@dataclass(eq=False)
class ValuableCharts:
    phi0: Chart
    phi_minus1: Chart
    f0: SampledMap
    lam: float
    kappa_F: float
    normal_form_residual: float
    section_residual: float = 0.0
    exact0: object = field(default=None, repr=False)
    exact_minus1: object = field(default=None, repr=False)
    K_hat: float = float("nan")

    def to_dict(self):
        return {"lam": self.lam, "kappa_F": self.kappa_F, "K_hat": self.K_hat,
                "normal_form_residual": self.normal_form_residual,
                "section_residual": self.section_residual, "f0": self.f0.to_dict(),
                "phi0": self.phi0.to_dict(), "phi_minus1": self.phi_minus1.to_dict()}


def normal_form_charts(F, phi0, v_minus1, section_pts, lam: float, m: int = 65,
                       nf_tol: float = NF_TOL, n_probe: int = 21) -> ValuableCharts:
    """Valuable charts from an exact chart ``phi0`` centered at v0.

    ``section_pts`` samples the curve through v_{-1} that becomes the
    horizontal axis of the critical chart; f0 is read off its image.
    """
    img = phi0.apply(F(section_pts))
    order = np.argsort(img[:, 1])
    w, u = img[order, 1], img[order, 0]
    if np.any(np.diff(w) <= 0):
        raise NotMonotone("image of the section is not a graph over the vertical axis")
    sigma = 1.0
    probe = CubicSpline(w, u)
    if probe(0.0, 2) < 0:
        sigma = -1.0
        phi0 = ReflectedChart(phi0, -1.0)
        u = -u
    f0 = SampledMap(w, u - float(CubicSpline(w, u)(0.0)))
    inner = f0.xs[(f0.xs > f0.xs[0] + 0.05 * np.ptp(f0.xs)) & (f0.xs < f0.xs[-1] - 0.05 * np.ptp(f0.xs))]
    half_w = 0.9 * min(-inner[0], inner[-1])
    f2 = f0(f0.xs[np.abs(f0.xs) <= half_w], 2)
    kappa_F = float(np.min(f2))
    K_hat = float(np.max(f2))
    sp = section_pts[np.argsort(section_pts[:, 0])]
    section = SampledMap(sp[:, 0], sp[:, 1]) if lam == 0 else None
    crit = CriticalChart(F, phi0, f0, lam, section)
    # probe grid of the critical chart target
    T0h = np.ptp(f0.ys)
    half_h = 0.25 * T0h / lam if lam > 0 else 0.25 * T0h
    xs = np.linspace(-half_w, half_w, n_probe)
    ys = np.linspace(-half_h, half_h, n_probe)
    Z = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
    lhs = phi0.apply(F(crit.invert(Z)))
    rhs = np.stack([f0(Z[:, 0]) - lam * Z[:, 1], Z[:, 0]], -1)
    resid = float(np.max(np.abs(lhs - rhs)))
    sec = crit.apply(section_pts)
    sec_res = float(np.max(np.abs(sec[:, 1][np.abs(sec[:, 0]) <= half_w])))
    if not resid < nf_tol:
        raise NormalFormResidualTooLarge(f"normal form residual {resid!r}", residual=resid)
    g0 = Chart.from_inverse(phi0.invert, Rect((-half_w, half_w), (-half_w, half_w)), m,
                            center=tuple(np.asarray(phi0.center, float)))
    gm1 = Chart.from_inverse(crit.invert, Rect((-half_w, half_w), (-half_h, half_h)), m,
                             center=tuple(np.asarray(v_minus1, float)))
    return ValuableCharts(g0, gm1, f0, lam, kappa_F, resid, sec_res, phi0, crit, K_hat)


def build_valuable_charts(seq: RenormSequence, crit: CriticalData, m: int = 65,
                          nf_tol: float = NF_TOL, n_section: int = 513) -> ValuableCharts:
    F = seq.F
    N = crit.depth
    dom = seq.ret(N).domain
    lev = dom.level
    R = dom.period
    phi0 = CenteredChart(lev, np.asarray(crit.v0))
    # section: F^{R-1} of the horizontal through v_{-R}, restricted to the box
    Y0 = crit.orbit_start[1]
    Xs = np.linspace(*dom.I_X, n_section)
    base = lev.from_henon(np.stack([Xs, np.full(n_section, Y0)], -1))
    section = F.iterate_points(base, R - 1)
    lam = float(np.exp(np.mean(np.log(np.abs(np.linalg.det(F.jacobian(F.orbit_points(crit.orbit_start, R - 1)))))))) \
        if getattr(F, "b", None) != 0 else 0.0
    return normal_form_charts(F, phi0, crit.v_minus1, section, lam, m, nf_tol)


# ---------------------------------------------------------------- first entry

@dataclass(eq=False)
class FirstEntryMap:
    depth: int
    h_samples: SampledMap
    e_sup: float
    h_deriv_bounds: tuple
    coverage: float = 1.0   # share of stencil points inside the critical chart

    def to_dict(self):
        return {"depth": self.depth, "h": self.h_samples.to_dict(), "e_sup": self.e_sup,
                "coverage": self.coverage,
                "h_deriv_bounds": list(self.h_deriv_bounds)}


def centered_chart(seq: RenormSequence, n: int, center) -> CenteredChart:
    return CenteredChart(seq.ret(n).domain.level, np.asarray(center, float))


def section_interval(seq: RenormSequence, n: int, center, frac: float = 1.0):
    """Chart interval I^n_0 of the horizontal through ``center`` in B^n."""
    dom = seq.ret(n).domain
    psi = centered_chart(seq, n, center)
    xa = dom.level.leaf_x(np.array(dom.I_X), np.full(2, center[1]))
    X = np.sort(xa - center[0]) * frac
    return psi, (float(X[0]), float(X[1]))


def first_entry_map(seq: RenormSequence, charts: ValuableCharts, n: int, n_samples: int = 257,
                    stencil: float = 1e-3) -> FirstEntryMap:
    """H_n = Phi_{-1} o F^{R_n - 1} o (Psi^n)^{-1} on I^n_0 and a thin vertical stencil."""
    F = seq.F
    v0 = np.asarray(charts.exact0.center, float)
    psi, (lo, hi) = section_interval(seq, n, v0)
    R = seq.ret(n).period
    xs = np.linspace(lo, hi, n_samples)
    T = seq.ret(n).chart.target
    dy = stencil * T.height
    vals = []
    for y in (0.0, -dy, dy):
        p = psi.invert(np.stack([xs, np.full_like(xs, y)], -1))
        vals.append(charts.exact_minus1.apply(F.iterate_points(p, R - 1)))
    h = vals[0][:, 0]
    dh = np.gradient(h, xs)
    if not (np.all(dh > 0) or np.all(dh < 0)):
        raise NotMonotone(f"h_{n} is not strictly monotone", depth=n)
    ev = np.concatenate([v[:, 1] for v in vals])
    fin = np.isfinite(ev)
    e_sup = float(np.max(np.abs(ev[fin]))) if fin.any() else float("nan")
    return FirstEntryMap(n, SampledMap(xs, h), e_sup,
                         (float(np.min(np.abs(dh))), float(np.max(np.abs(dh)))), float(fin.mean()))


# ---------------------------------------------------------------- quadratic mapping

def quad_mapping(g: Callable, charts: ValuableCharts, interval, psi_n=None, n: int = 2049):
    """Factor Q = P o F o Phi_{-1}^{-1} o G, G(x) = (x, g(x)), as kappa psi^2 + a.

    Without ``psi_n`` the projection is the horizontal projection of phi0.
    Returns (psi, a, kappa, x_c, residual); psi is in the variable x - x_c.
    """
    proj = charts.exact0 if psi_n is None else psi_n
    F = charts.exact_minus1.F

    def Q(x):
        x = np.asarray(x, float)
        p = charts.exact_minus1.invert(np.stack([x, np.broadcast_to(g(x), x.shape)], -1))
        return proj.apply(F(p))[..., 0]

    lo, hi = interval
    xs = np.linspace(lo, hi, n)
    qs = Q(xs)
    k = int(np.argmin(qs))
    k = min(max(k, 1), n - 2)
    dQ = lambda t: float((Q(np.array([t + 1e-7])) - Q(np.array([t - 1e-7])))[0])
    xc = brentq(dQ, xs[k - 1], xs[k + 1], xtol=1e-15) if dQ(xs[k - 1]) * dQ(xs[k + 1]) < 0 else xs[k]
    a = float(Q(np.array([xc]))[0])
    shifted = lambda t: Q(np.asarray(t, float) + xc) - a
    psi, kappa = quadratic_factorize(shifted, (lo - xc, hi - xc), n)
    res = factor_residual(shifted, psi, kappa)
    return psi, a, kappa, xc, res


# ---------------------------------------------------------------- local manifolds

def _window(pts, p, length, n):
    """Cubic resample of the polyline ``pts`` on a window of the given arc
    length centred at the projection of p; also the unit tangent there."""
    if not np.all(np.isfinite(pts)):
        raise NoConvergence("graph transform lost the curve to overflow")
    c = Curve.from_samples(pts)
    P, cl = c.samples, c.cumulative_length
    k = int(np.argmin(np.linalg.norm(P - p, axis=1)))
    best = (np.inf, float(cl[k]))
    for j in (k - 1, k):
        if 0 <= j < len(P) - 1:
            seg = P[j + 1] - P[j]
            u = float(np.clip(np.dot(p - P[j], seg) / np.dot(seg, seg), 0.0, 1.0))
            dist = float(np.linalg.norm(P[j] + u * seg - p))
            if dist < best[0]:
                best = (dist, float(cl[j] + u * (cl[j + 1] - cl[j])))
    spl = CubicSpline(cl, P)
    s = np.clip(best[1] + np.linspace(-length / 2, length / 2, n), 0, c.length)
    tan = spl(best[1], 1)
    return spl(s), tan / np.linalg.norm(tan)


def _graph_transform(step_curve, p, length, n, tol, max_steps):
    prev = None
    m = 1
    for _ in range(max_steps):
        try:
            cur, _ = _window(step_curve(m), p, length, n)
        except (DegenerateCurve, NoConvergence) as exc:
            raise NoConvergence(f"graph transform failed at m={m}", iterations=m) from exc
        if prev is not None:
            if np.dot(cur[-1] - cur[0], prev[-1] - prev[0]) < 0:
                cur = cur[::-1]
            if np.max(np.linalg.norm(cur - prev, axis=1)) < tol:
                return Curve.from_samples(cur)
        prev = cur
        m = max(m + 1, int(round(m * math.sqrt(2))))
    raise NoConvergence("graph transform did not settle", iterations=m)


def _step_transform(step, jac, orbit, seed_dir, length, n):
    """Carry a straight seed through orbit[0] along ``orbit`` with one-step
    maps, keeping a window of about ``length`` at every stop."""
    t = np.linspace(-0.6 * length, 0.6 * length, n)
    cur = orbit[0] + t[:, None] * seed_dir
    for k in range(1, len(orbit)):
        _, tan = _window(cur, orbit[k - 1], 1e-3 * length, 3)
        gain = np.linalg.norm(jac(orbit[k - 1]) @ tan)
        cur, _ = _window(cur, orbit[k - 1], 1.2 * length / gain, n)
        cur = step(cur)
    return cur


def local_manifolds(F, p, length: float, n: int = 2049, tol: float = 1e-10, max_steps: int = 16):
    """Local strong stable and center curves through p by graph transform.

    W^ss: a straight segment at F^m(p) pulled back one step at a time; W^c:
    a horizontal segment at F^{-m}(p) pushed forward the same way.  Windows
    keep their length at every step, and m grows until the curves at p
    agree within ``tol`` (m grows by factors of sqrt 2).
    """
    p = np.asarray(p, float)
    Finv_jac = lambda q: np.linalg.inv(F.jacobian(F.inverse(q)))

    def ss(m):
        orbit = [p]
        J = np.eye(2)
        for _ in range(m):
            J = F.jacobian(orbit[-1]) @ J
            orbit.append(F(orbit[-1]))
        v = J @ strong_vector(J)
        return _step_transform(F.inverse, Finv_jac, orbit[::-1], v / np.linalg.norm(v), length, n)

    def cc(m):
        q = p
        for _ in range(m):
            q = F.inverse(q)
        if not (np.all(np.isfinite(q)) and F.domain.contains(q)):
            raise NoConvergence("backward orbit left the domain", iterations=m)
        # anchor on forward images: they shadow p, the raw backward orbit does not
        fwd = [q]
        for _ in range(m):
            fwd.append(F(fwd[-1]))
        return _step_transform(F, F.jacobian, fwd, np.array([1.0, 0.0]), length, n)

    return (_graph_transform(ss, p, length, n, tol, max_steps),
            _graph_transform(cc, p, length, n, tol, max_steps))


def strong_vector(J):
    """Unit right singular vector of J with the smaller singular value."""
    _, _, Vt = np.linalg.svd(J)
    return Vt[1]


# ---------------------------------------------------------------- recurrence

def critical_recurrence_check(seq: RenormSequence, crit: CriticalData, n_samples: int = 40):
    """diam of the nested intersections of F^{R_m}(B^m), m <= n, with v0 membership.

    The images are far too thin for polygon clipping, so the intersection is
    sampled: F^{R_n}(p), p in B^n, lies in F^{R_m}(B^m) exactly when
    F^{R_n - R_m}(p) lies in B^m, which only needs forward iterates.
    """
    F = seq.F
    diam, contains = [], []
    start = np.asarray(crit.orbit_start, float)
    RN = seq.ret(crit.depth).period
    for n in range(1, seq.depth + 1):
        dom = seq.ret(n).domain
        Rn = dom.period
        pts = np.vstack(dom.sample(n_probe=n_samples))
        keep = np.ones(len(pts), bool)
        for m in range(1, n + 1):
            dm = seq.ret(m).domain
            keep &= dm.contains(F.iterate_points(pts, Rn - dm.period))
        if not keep.any():
            raise EmptyIntersection("nested images do not intersect", depth=n)
        img = F.iterate_points(pts[keep], Rn)
        x0, y0 = img.min(0)
        x1, y1 = img.max(0)
        diam.append(float(math.hypot(x1 - x0, y1 - y0)))
        ok = True
        if n <= crit.depth:
            for m in range(1, n + 1):
                dm = seq.ret(m).domain
                ok &= bool(dm.contains(F.iterate_points(start, RN - dm.period)))
        contains.append(ok)
    return diam, contains


# ---------------------------------------------------------------- chart convergence

def chart_distances(seq: RenormSequence, center, n_grid: int = 33):
    """d_n = sup |Psi^n o (Psi^{n+1})^{-1} - Id| over the target of Psi^{n+1}."""
    out = []
    for n in range(1, seq.depth):
        a = centered_chart(seq, n, center)
        b = centered_chart(seq, n + 1, center)
        dom = seq.ret(n + 1).domain
        lev = dom.level
        xa = lev.leaf_x(np.array(dom.I_X), np.full(2, center[1]))
        X = np.sort(xa - center[0])
        Y = np.sort(b.phi2(np.array(dom.I_Y)))
        xs = np.linspace(*X, n_grid)
        ys = np.linspace(*Y, n_grid)
        Z = np.stack(np.meshgrid(xs, ys, indexing="ij"), -1).reshape(-1, 2)
        W = a.apply(b.invert(Z))
        out.append(float(np.max(np.abs(W - Z))))
    return out
