"""Sampled curves, charts and projective directions.

Curves are polylines, charts are grids of the inverse map sampled on a
regular lattice of the target rectangle.  Every object is treated as an
immutable value once built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import shapely
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import cKDTree

from .errors import (DegenerateCurve, NewtonDiverged, NoQuadraticCritical,
                     NotAGraph, OutOfDomain)

GRAD_TOL = 1e-8
CURV_FLOOR = 1e-6
INVERSE_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class DirectionP:
    """Projective direction, angle normalized to [0, pi)."""

    angle: float

    def __post_init__(self):
        a = float(np.mod(self.angle, np.pi))
        if a >= np.pi:
            a = 0.0
        object.__setattr__(self, "angle", a)

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)) or np.hypot(*v) == 0:
            raise ValueError("direction needs a finite nonzero vector")
        return cls(np.arctan2(v[1], v[0]))

    @property
    def vector(self):
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def distance(self, other: "DirectionP") -> float:
        d = abs(self.angle - other.angle)
        return min(d, np.pi - d)


HORIZONTAL = DirectionP(0.0)
VERTICAL = DirectionP(np.pi / 2)


@dataclass(frozen=True)
class Rect:
    h_interval: tuple
    v_interval: tuple

    def __post_init__(self):
        h = tuple(float(t) for t in self.h_interval)
        v = tuple(float(t) for t in self.v_interval)
        if not (h[1] > h[0] and v[1] > v[0]):
            raise ValueError(f"empty rectangle {h} x {v}")
        object.__setattr__(self, "h_interval", h)
        object.__setattr__(self, "v_interval", v)

    @property
    def width(self):
        return self.h_interval[1] - self.h_interval[0]

    @property
    def height(self):
        return self.v_interval[1] - self.v_interval[0]

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        (x0, x1), (y0, y1) = self.h_interval, self.v_interval
        return ((p[..., 0] >= x0 - tol) & (p[..., 0] <= x1 + tol)
                & (p[..., 1] >= y0 - tol) & (p[..., 1] <= y1 + tol))

    def to_list(self):
        return [list(self.h_interval), list(self.v_interval)]


# ---------------------------------------------------------------- curves

@dataclass(frozen=True, eq=False)
class Curve:
    samples: np.ndarray
    cumulative_length: np.ndarray = field(repr=False)
    tangents: np.ndarray = field(repr=False)  # angles mod pi, one per node

    @classmethod
    def from_samples(cls, samples, lengths=None) -> "Curve":
        """Curve through ``samples``; ``lengths`` overrides the chordal arc-length table."""
        s = np.array(samples, dtype=float).reshape(-1, 2)
        if len(s) < 2 or not np.all(np.isfinite(s)):
            raise DegenerateCurve("need at least 2 finite samples")
        seg = np.hypot(*np.diff(s, axis=0).T)
        if lengths is not None:
            cum = np.array(lengths, dtype=float)
            if len(cum) != len(s) or cum[0] != 0 or np.any(np.diff(cum) <= 0) or np.any(seg == 0):
                raise DegenerateCurve("arc-length table must start at 0 and increase strictly")
        else:
            if np.any(seg == 0):
                keep = np.concatenate([[True], seg > 0])
                s = s[keep]
                seg = seg[seg > 0]
            if len(s) < 2:
                raise DegenerateCurve("total chordal length is 0")
            cum = np.concatenate([[0.0], np.cumsum(seg)])
        d = np.gradient(s, axis=0)
        tang = np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi)
        s.setflags(write=False)
        return cls(s, cum, tang)

    @property
    def length(self) -> float:
        return float(self.cumulative_length[-1])

    def __len__(self):
        return len(self.samples)

    def point_at(self, s):
        """Point at chordal arc length ``s`` (linear interpolation)."""
        s = np.asarray(s, dtype=float)
        c = self.cumulative_length
        return np.stack([np.interp(s, c, self.samples[:, 0]),
                         np.interp(s, c, self.samples[:, 1])], axis=-1)

    def to_dict(self):
        return {"samples": self.samples.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls.from_samples(d["samples"])


def segment(p, q, n=64) -> Curve:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return Curve.from_samples((1 - t) * np.asarray(p, float) + t * np.asarray(q, float))


def arc_length_parameterize(curve: Curve, n: Optional[int] = None) -> Curve:
    """Resample at uniform chordal arc-length spacing (at least 64 nodes)."""
    if curve.length == 0:
        raise DegenerateCurve("total chordal length is 0")
    n = max(64, len(curve)) if n is None else n
    s = np.linspace(0.0, curve.length, n)
    if n == len(curve) and np.array_equal(s, curve.cumulative_length):
        return curve
    pts = curve.point_at(s)
    pts[0], pts[-1] = curve.samples[0], curve.samples[-1]
    # the source arc-length table is kept: the new chords cut corners and
    # would otherwise shorten the curve at second order
    return Curve.from_samples(pts, lengths=s)


# ---------------------------------------------------------------- charts

class Chart:
    """Sampled chart Phi: domain -> target.

    ``grid[i, j]`` is Phi^{-1} at the lattice node (X_i, Y_j) of ``target``.
    The inverse is a bicubic interpolant of the grid; the forward map is a
    damped Newton solve started from the nearest grid node.
    """

    def __init__(self, grid, target: Rect, center=None):
        grid = np.array(grid, dtype=float)
        if grid.ndim != 3 or grid.shape[0] != grid.shape[1] or grid.shape[2] != 2:
            raise ValueError("grid must have shape (m, m, 2)")
        self.grid = grid
        self.grid.setflags(write=False)
        self.target = target
        self.m = grid.shape[0]
        self.xs = np.linspace(*target.h_interval, self.m)
        self.ys = np.linspace(*target.v_interval, self.m)
        self._sx = RectBivariateSpline(self.xs, self.ys, grid[..., 0], kx=3, ky=3, s=0)
        self._sy = RectBivariateSpline(self.xs, self.ys, grid[..., 1], kx=3, ky=3, s=0)
        self._tree = None
        if center is None:
            center = self.inverse(np.array([np.mean(target.h_interval), np.mean(target.v_interval)]))
        self.center = Point2(*map(float, center))

    @classmethod
    def from_inverse(cls, inv, target: Rect, m: int = 129, center=None):
        X, Y = np.meshgrid(np.linspace(*target.h_interval, m),
                           np.linspace(*target.v_interval, m), indexing="ij")
        grid = np.asarray(inv(np.stack([X, Y], axis=-1)), dtype=float)
        return cls(grid, target, center)

    @classmethod
    def affine(cls, A, c, target: Rect, m: int = 129):
        """Chart z = A p + c."""
        A = np.asarray(A, float)
        Ainv = np.linalg.inv(A)
        c = np.asarray(c, float)
        return cls.from_inverse(lambda z: (z - c) @ Ainv.T, target, m)

    @classmethod
    def identity(cls, target: Rect, m: int = 129):
        return cls.affine(np.eye(2), np.zeros(2), target, m)

    # Phi^{-1} and its Jacobian
    def inverse(self, z):
        z = np.asarray(z, dtype=float)
        X, Y = z[..., 0].ravel(), z[..., 1].ravel()
        out = np.stack([self._sx.ev(X, Y), self._sy.ev(X, Y)], axis=-1)
        return out.reshape(z.shape)

    def inverse_jacobian(self, z):
        z = np.asarray(z, dtype=float)
        X, Y = z[..., 0].ravel(), z[..., 1].ravel()
        J = np.empty((len(X), 2, 2))
        J[:, 0, 0] = self._sx.ev(X, Y, dx=1)
        J[:, 0, 1] = self._sx.ev(X, Y, dy=1)
        J[:, 1, 0] = self._sy.ev(X, Y, dx=1)
        J[:, 1, 1] = self._sy.ev(X, Y, dy=1)
        return J.reshape(z.shape[:-1] + (2, 2))

    def forward(self, p, tol=INVERSE_TOL, maxiter=50):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, 2)
        if self._tree is None:
            self._tree = cKDTree(self.grid.reshape(-1, 2))
        _, idx = self._tree.query(flat)
        i, j = np.unravel_index(idx, (self.m, self.m))
        z = np.stack([self.xs[i], self.ys[j]], axis=-1)
        scale = max(self.target.width, self.target.height)
        done = np.zeros(len(flat), bool)
        for _ in range(maxiter):
            r = self.inverse(z) - flat
            J = self.inverse_jacobian(z)
            step = np.linalg.solve(J, r[..., None])[..., 0]
            # damping keeps early steps inside a few cells
            cap = 4 * scale / (self.m - 1)
            nrm = np.hypot(step[:, 0], step[:, 1])
            fac = np.where(nrm > cap, cap / np.maximum(nrm, 1e-300), 1.0)
            z = z - step * fac[:, None]
            done = nrm < tol * max(1.0, scale)
            if np.all(done):
                break
        if not np.all(done) or not np.all(np.isfinite(z)):
            raise NewtonDiverged("chart_apply did not converge", worst=float(np.max(nrm)))
        return z.reshape(p.shape)

    def jacobian_determinants(self):
        J = self.inverse_jacobian(np.stack(np.meshgrid(self.xs, self.ys, indexing="ij"), -1))
        return np.linalg.det(J)

    def to_dict(self):
        return {"m": self.m, "target": self.target.to_list(),
                "grid": self.grid.reshape(-1, 2).tolist(), "center": list(self.center)}

    @classmethod
    def from_dict(cls, d):
        m = int(d["m"])
        grid = np.asarray(d["grid"], float).reshape(m, m, 2)
        return cls(grid, Rect(*d["target"]), d.get("center"))


def chart_apply(chart: Chart, p, tol=INVERSE_TOL):
    try:
        z = chart.forward(p, tol)
    except NewtonDiverged:
        ring = np.concatenate([chart.grid[:, 0], chart.grid[-1, 1:], chart.grid[-2::-1, -1],
                               chart.grid[0, -2:0:-1]])
        hull = shapely.Polygon(ring)
        if not np.all(shapely.contains_xy(hull, *np.asarray(p, float).reshape(-1, 2).T)):
            raise OutOfDomain("point outside chart domain")
        raise
    if not np.all(chart.target.contains(z, tol=1e-9 * max(chart.target.width, chart.target.height))):
        raise OutOfDomain("point outside chart domain")
    return z


def chart_invert(chart: Chart, z):
    z = np.asarray(z, float)
    if not np.all(chart.target.contains(z, tol=1e-12 * max(chart.target.width, chart.target.height))):
        raise OutOfDomain("point outside chart target")
    return chart.inverse(z)


def _arc_table(points, params):
    d = np.gradient(points, params, axis=0, edge_order=2)
    speed = np.hypot(d[:, 0], d[:, 1])
    return cumulative_simpson(speed, x=params, initial=0.0)


def center_chart(chart: Chart, q, n_fine: int = 4097) -> Chart:
    """Reparameterize coordinates so ``q`` goes to 0 with unit-speed axes."""
    zq = chart_apply(chart, np.asarray(q, float))
    Xf = np.linspace(*chart.target.h_interval, n_fine)
    Yf = np.linspace(*chart.target.v_interval, n_fine)
    sx = _arc_table(chart.inverse(np.stack([Xf, np.full_like(Xf, zq[1])], -1)), Xf)
    sy = _arc_table(chart.inverse(np.stack([np.full_like(Yf, zq[0]), Yf], -1)), Yf)
    sx -= CubicSpline(Xf, sx)(zq[0])
    sy -= CubicSpline(Yf, sy)(zq[1])
    x_of_s = CubicSpline(sx, Xf)
    y_of_t = CubicSpline(sy, Yf)
    target = Rect((sx[0], sx[-1]), (sy[0], sy[-1]))

    def inv(w):
        X = np.clip(x_of_s(w[..., 0]), *chart.target.h_interval)
        Y = np.clip(y_of_t(w[..., 1]), *chart.target.v_interval)
        return chart.inverse(np.stack([X, Y], -1))

    return Chart.from_inverse(inv, target, chart.m, center=tuple(np.asarray(q, float)))


# ---------------------------------------------------------------- graphs

@dataclass(frozen=True, eq=False)
class GraphFit:
    g_values: np.ndarray
    sup_deriv: float
    sup_norm: float
    params: Optional[np.ndarray] = None  # the graph's independent coordinate
    crit_point: Optional[float] = None
    curvature: Optional[float] = None

    def __post_init__(self):
        if self.curvature is not None and self.crit_point is None:
            raise ValueError("curvature requires a critical point")


def _chart_coords(curve, chart):
    if chart is None:
        return np.array(curve.samples)
    return chart_apply(chart, curve.samples)


def _graph(indep, dep):
    d = np.diff(indep)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NotAGraph("chart image is not single-valued over its graph axis")
    order = np.argsort(indep)
    t, g = indep[order], dep[order]
    # flat to rounding relative to the curve's own scale
    if np.ptp(g) <= 8 * np.finfo(float).eps * max(np.max(np.abs(g)), np.ptp(t)):
        deriv = np.zeros_like(g)
    else:
        deriv = np.gradient(g, t, edge_order=2)
    return GraphFit(g, float(np.max(np.abs(deriv))), float(np.max(np.abs(g))), t)


def fit_vertical_graph(curve: Curve, chart: Optional[Chart] = None) -> GraphFit:
    """Fit x = g_v(y) in chart coordinates; ``sup_deriv`` is the t of t-vertical."""
    z = _chart_coords(curve, chart)
    return _graph(z[:, 1], z[:, 0])


def fit_horizontal_graph(curve: Curve, chart: Optional[Chart] = None) -> GraphFit:
    z = _chart_coords(curve, chart)
    return _graph(z[:, 0], z[:, 1])


def quadratic_critical(t, g):
    """Critical point and second derivative of sampled g(t).

    The critical point is a root of the spline derivative; the curvature
    comes from a least-squares quadratic through the 5 nearest nodes.
    """
    t = np.asarray(t, float)
    g = np.asarray(g, float)
    dg = np.gradient(g, t, edge_order=2)
    sg = np.sign(dg)
    # a sign change between neighbours, or an exact zero flanked by opposite signs
    inner = np.nonzero((sg[1:-2] * sg[2:-1] < 0) | ((sg[1:-2] == 0) & (sg[:-3] * sg[2:-1] < 0)))[0] + 1
    if len(inner) == 0:
        raise NoQuadraticCritical("no interior sign change of g'")
    k = inner[np.argmax(np.abs(dg[inner + 1] - dg[inner - 1]))]
    spl = CubicSpline(t, g).derivative()
    lo, hi = t[max(k - 1, 0)], t[min(k + 2, len(t) - 1)]
    if spl(lo) * spl(hi) > 0:
        raise NoQuadraticCritical("spline derivative has no bracketed root")
    c = brentq(spl, lo, hi, xtol=1e-15 * max(1.0, abs(t[k])))
    if abs(spl(c)) > GRAD_TOL * max(1.0, np.max(np.abs(dg))):
        raise NoQuadraticCritical("critical point residual too large")
    j = np.argsort(np.abs(t - c))[:5]
    coef = np.polyfit(t[j] - c, g[j], 2)
    kappa = 2.0 * coef[0]
    if abs(kappa) < CURV_FLOOR:
        raise NoQuadraticCritical("curvature below floor", kappa=kappa)
    return float(c), float(kappa)


def valuable_curvature(curve: Curve, chart: Optional[Chart] = None) -> GraphFit:
    fit = fit_vertical_graph(curve, chart)
    if fit.sup_deriv == 0:
        raise NoQuadraticCritical("graph is constant")
    c, kappa = quadratic_critical(fit.params, fit.g_values)
    return GraphFit(fit.g_values, fit.sup_deriv, fit.sup_norm, fit.params, c, kappa)


# ---------------------------------------------------------------- distance

def _unit_speed(curve, n):
    s = np.linspace(0.0, curve.length, n)
    pts = curve.point_at(s)
    tan = np.gradient(pts, s, axis=0, edge_order=2) if n > 2 else np.diff(pts, axis=0)
    tan /= np.maximum(np.hypot(tan[:, 0], tan[:, 1]), 1e-300)[:, None]
    return s, pts, tan


def curve_distance(c1: Curve, c2: Curve, order: int = 0, n: int = 1025) -> float:
    """C^0 / C^1 distance between unit-speed curves, minimized over window offset."""
    if c1.length == 0 or c2.length == 0:
        raise DegenerateCurve("zero-length curve")
    if c2.length > c1.length:
        c1, c2 = c2, c1
    s = np.linspace(0.0, c2.length, n)
    p2 = c2.point_at(s)
    t2 = np.gradient(p2, s, axis=0, edge_order=2)
    t2 /= np.hypot(t2[:, 0], t2[:, 1])[:, None]

    def d(o):
        p1 = c1.point_at(np.clip(o + s, 0.0, c1.length))
        val = np.max(np.hypot(*(p1 - p2).T))
        if order >= 1:
            t1 = np.gradient(p1, s, axis=0, edge_order=2)
            t1 /= np.maximum(np.hypot(t1[:, 0], t1[:, 1]), 1e-300)[:, None]
            val = max(val, np.max(np.hypot(*(t1 - t2).T)))
        return val

    span = max(c1.length - c2.length, 0.0)
    if span <= 1e-15 * c1.length:
        return float(d(0.0))
    offs = np.linspace(0.0, span, 65)
    vals = np.array([d(o) for o in offs])
    k = int(np.argmin(vals))
    if k in (0, len(offs) - 1):
        lo, hi = offs[max(k - 1, 0)], offs[min(k + 1, len(offs) - 1)]
        grid = np.linspace(lo, hi, 65)
        gv = np.array([d(o) for o in grid])
        return float(min(gv.min(), vals[k]))
    res = minimize_scalar(d, bounds=(offs[k - 1], offs[k + 1]), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, span)})
    return float(min(res.fun, vals[k]))
