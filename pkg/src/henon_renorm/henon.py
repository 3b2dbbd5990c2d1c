"""Hénon-like maps F(x, y) = (f(x, y), x), orbits and derivative cocycles."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (EscapedDomain, NoConvergence, NotADiffeomorphism,
                     NotUnimodal, OutOfDomain, SingularValueTie, NewtonDiverged)
from .geometry import DirectionP, Rect

FD_STEP = 1e-6
DEFAULT_DOMAIN = Rect((-2.5, 2.5), (-2.5, 2.5))


@dataclass(frozen=True, eq=False)
class HenonLikeMap:
    """Hénon-like map.

    The canonical family is f(x, y) = a - x**2 - b*y.  Passing ``profile``
    (a vectorized callable f(x, y)) gives an evaluator-backed map whose
    derivatives come from centered finite differences.
    """

    a: float = float("nan")
    b: float = 0.0
    profile: Optional[Callable] = field(default=None, repr=False)
    domain: Rect = DEFAULT_DOMAIN
    jacobian_det: Optional[float] = None  # known constant determinant, if any

    @property
    def canonical(self) -> bool:
        return self.profile is None

    def f(self, x, y):
        if self.profile is None:
            return self.a - x * x - self.b * y
        return self.profile(x, y)

    def fx(self, x, y):
        if self.profile is None:
            return -2.0 * np.asarray(x, float)
        h = FD_STEP
        return (self.profile(x + h, y) - self.profile(x - h, y)) / (2 * h)

    def fy(self, x, y):
        if self.profile is None:
            return np.full(np.shape(x), -self.b, dtype=float)
        h = FD_STEP
        return (self.profile(x, y + h) - self.profile(x, y - h)) / (2 * h)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return np.stack([self.f(x, y), x], axis=-1)

    def jacobian(self, p):
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        J = np.zeros(p.shape[:-1] + (2, 2))
        J[..., 0, 0] = self.fx(x, y)
        J[..., 0, 1] = self.fy(x, y)
        J[..., 1, 0] = 1.0
        return J

    def inverse(self, p, tol=1e-12, maxiter=60):
        """F^{-1}: closed form for the canonical family, damped Newton otherwise."""
        p = np.asarray(p, dtype=float)
        u, v = p[..., 0], p[..., 1]
        if self.profile is None:
            if self.b == 0:
                raise NotADiffeomorphism("b = 0 map is not invertible")
            return np.stack([v, (self.a - v * v - u) / self.b], axis=-1)
        y = np.zeros_like(u)
        for _ in range(maxiter):
            r = self.f(v, y) - u
            d = self.fy(v, y)
            if np.any(d == 0):
                raise NotADiffeomorphism("df/dy vanishes")
            step = r / d
            step = np.clip(step, -1.0, 1.0)
            y = y - step
            if np.all(np.abs(step) < tol * np.maximum(1.0, np.abs(y))):
                return np.stack([v, y], axis=-1)
        raise NewtonDiverged("inverse did not converge")

    def orbit_points(self, p, m):
        """All iterates p_0..p_m, vectorized over leading axes, no checks."""
        p = np.asarray(p, dtype=float)
        out = np.empty((m + 1,) + p.shape)
        out[0] = p
        for k in range(m):
            out[k + 1] = self(out[k])
        return out

    def iterate_points(self, p, m):
        p = np.asarray(p, dtype=float)
        for _ in range(m):
            p = self(p)
        return p

    def cocycle(self, p, m):
        """Return (F^m(p), DF^m(p)) vectorized over leading axes."""
        p = np.asarray(p, dtype=float)
        J = np.broadcast_to(np.eye(2), p.shape[:-1] + (2, 2)).copy()
        for _ in range(m):
            J = self.jacobian(p) @ J
            p = self(p)
        return p, J

    def to_dict(self):
        if self.profile is not None:
            raise ValueError("evaluator maps do not serialize")
        return {"family": "canonical", "a": self.a, "b": self.b,
                "domain": self.domain.to_list()}

    @classmethod
    def from_dict(cls, d):
        if d.get("family", "canonical") != "canonical":
            raise ValueError(f"unknown family {d.get('family')!r}")
        dom = Rect(*d["domain"]) if "domain" in d else DEFAULT_DOMAIN
        return cls(a=float(d["a"]), b=float(d["b"]), domain=dom)


def canonical(a, b, domain: Rect = DEFAULT_DOMAIN) -> HenonLikeMap:
    return HenonLikeMap(a=float(a), b=float(b), domain=domain)


class LinearMap:
    """Linear map p -> A p; a constant derivative cocycle for testing."""

    def __init__(self, A, domain: Rect = Rect((-1e6, 1e6), (-1e6, 1e6))):
        self.A = np.asarray(A, dtype=float)
        self.domain = domain

    def __call__(self, p):
        return np.asarray(p, float) @ self.A.T

    def jacobian(self, p):
        p = np.asarray(p, float)
        return np.broadcast_to(self.A, p.shape[:-1] + (2, 2)).copy()

    def inverse(self, p):
        return np.asarray(p, float) @ np.linalg.inv(self.A).T

    def iterate_points(self, p, m):
        for _ in range(m):
            p = self(p)
        return p


# ---------------------------------------------------------------- orbits

@dataclass(frozen=True, eq=False)
class OrbitSegment:
    points: np.ndarray      # (M+1, 2)
    jacobians: np.ndarray   # (M, 2, 2), DF at points[0..M-1]
    cumulative: np.ndarray  # (M+1, 2, 2), DF^m(points[0])

    @property
    def M(self):
        return len(self.jacobians)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("m,x,y\n")
        for m, (x, y) in enumerate(self.points):
            buf.write(f"{m},{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()


def apply(F, p):
    p = np.asarray(p, float)
    if not np.all(F.domain.contains(p)):
        raise OutOfDomain("point outside B")
    return F(p)


def orbit_from_jacobians(points, jacobians) -> OrbitSegment:
    jac = np.asarray(jacobians, float)
    cum = np.empty((len(jac) + 1, 2, 2))
    cum[0] = np.eye(2)
    for m in range(len(jac)):
        cum[m + 1] = jac[m] @ cum[m]
    return OrbitSegment(np.asarray(points, float), jac, cum)


def iterate(F, p, m: int, check_domain: bool = True) -> OrbitSegment:
    pts = np.empty((m + 1, 2))
    pts[0] = p
    if check_domain and not F.domain.contains(pts[0]):
        raise EscapedDomain("orbit left B", m=0)
    for k in range(m):
        pts[k + 1] = F(pts[k])
        if check_domain and not F.domain.contains(pts[k + 1]):
            raise EscapedDomain(f"orbit left B at step {k + 1}", m=k + 1)
    return orbit_from_jacobians(pts, F.jacobian(pts[:-1]))


def jacobian(F, p):
    p = np.asarray(p, float)
    if not np.all(F.domain.contains(p)):
        raise OutOfDomain("point outside B")
    return F.jacobian(p)


# ---------------------------------------------------------------- profile

@dataclass(frozen=True, eq=False)
class UnimodalProfile:
    xs: np.ndarray
    ys: np.ndarray
    critical_point: float
    critical_value: float
    maximum: bool  # True when the critical point is a maximum

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)


def count_turns(values) -> int:
    d = np.sign(np.diff(values))
    d = d[d != 0]
    return int(np.count_nonzero(d[1:] != d[:-1]))


def profile_from_function(f, interval, n: int = 2049) -> UnimodalProfile:
    xs = np.linspace(*interval, n)
    ys = np.asarray(f(xs), float)
    turns = count_turns(ys)
    if turns != 1:
        raise NotUnimodal(f"{turns} sampled turning points", turns=turns)
    k = int(np.argmax(np.abs(ys - 0.5 * (ys[0] + ys[-1]))))
    k = min(max(k, 1), n - 2)
    is_max = ys[k] > ys[0]
    sgn = -1.0 if is_max else 1.0
    res = minimize_scalar(lambda t: sgn * float(f(np.array([t]))[0]), method="golden",
                          bracket=(xs[k - 1], xs[k], xs[k + 1]), tol=1e-10)
    c = float(res.x)
    return UnimodalProfile(xs, ys, c, float(f(np.array([c]))[0]), bool(is_max))


def profile_1d(F, n: int = 2049) -> UnimodalProfile:
    """x -> f(x, 0) on the horizontal side of B, critical point by golden section."""
    return profile_from_function(lambda x: F.f(x, np.zeros_like(x)), F.domain.h_interval, n)


def period_doubling_parameter(b: float) -> float:
    """Flip parameter a_1(b) = 3 (1 + b)^2 / 4 of the canonical family."""
    return 0.75 * (1.0 + b) ** 2


# ---------------------------------------------------------------- directions

@dataclass(frozen=True)
class DirectionEstimate:
    direction: DirectionP
    iterates_used: int
    residual: float
    log_sv_gap: float = float("inf")  # log(sigma_1 / sigma_2)


def _min_right_singular(mats: Sequence[np.ndarray], block: int = 10):
    """Smaller right singular direction of mats[-1] @ ... @ mats[0].

    The product is factored as Q T with T upper triangular, re-orthonormalizing
    every ``block`` steps; T is kept normalized so tiny singular values survive.
    """
    Q = np.eye(2)
    T = np.eye(2)
    B = np.eye(2)
    for k, D in enumerate(mats):
        B = D @ B
        if (k + 1) % block == 0 or k == len(mats) - 1:
            Q, R = np.linalg.qr(B @ Q)
            T = R @ T
            T /= np.max(np.abs(T))
            B = np.eye(2)
            if not np.all(np.isfinite(T)):
                raise NoConvergence("cocycle product is not finite")
    _, s, Vt = np.linalg.svd(T)
    gap = np.inf if s[1] == 0 else float(np.log(s[0] / s[1]))
    return Vt[1], gap


def _estimate(mats, m):
    v, gap = _min_right_singular(mats[:m])
    if gap < np.log1p(1e-9):
        raise SingularValueTie("sigma_1/sigma_2 < 1 + 1e-9", m=m)
    return DirectionP.from_vector(v), gap


def direction_from_cocycle(mats, m: Optional[int] = None) -> DirectionEstimate:
    m = len(mats) if m is None else m
    d, gap = _estimate(mats, m)
    half = max(1, m // 2)
    res = 0.0 if half == m else d.distance(_estimate(mats, half)[0])
    return DirectionEstimate(d, m, res, gap)


def _forward_mats(F, p, m):
    pts = np.asarray(F.orbit_points(p, m - 1)) if hasattr(F, "orbit_points") else None
    if pts is None:
        pts = [np.asarray(p, float)]
        for _ in range(m - 1):
            pts.append(F(pts[-1]))
        pts = np.array(pts)
    if not np.all(np.isfinite(pts)) or np.any(np.abs(pts) > 1e150):
        raise EscapedDomain("orbit escaped", m=int(np.argmax(~np.isfinite(pts).all(axis=-1))))
    return F.jacobian(pts)


def most_contracting_direction(F, p, m: int) -> DirectionEstimate:
    """Right singular direction of DF^m(p) with the smaller singular value."""
    if m < 1:
        raise ValueError("m >= 1 required")
    return direction_from_cocycle(_forward_mats(F, p, m), m)


def _doubling(mats_for, tol, m_max):
    m = 1
    prev = direction_from_cocycle(mats_for(1), 1).direction
    while m < m_max:
        m *= 2
        est = direction_from_cocycle(mats_for(m), m)
        res = est.direction.distance(prev)
        if res < tol:
            return DirectionEstimate(est.direction, m, res, est.log_sv_gap)
        prev = est.direction
    raise NoConvergence(f"no convergence up to m = {m_max}", m_max=m_max)


def strong_stable_direction(F, p, tol: float = 1e-10, m_max: int = 256) -> DirectionEstimate:
    cache = {}

    def mats(m):
        if m not in cache:
            cache[m] = _forward_mats(F, p, m)
        return cache[m]

    return _doubling(mats, tol, m_max)


def backward_orbit(F, p, m, history=None):
    """p_{-1}, ..., p_{-m}; taken from ``history`` where available."""
    out = [] if history is None else [np.asarray(h, float) for h in history[:m]]
    q = np.asarray(p, float) if not out else out[-1]
    while len(out) < m:
        q = F.inverse(q)
        if not np.all(np.isfinite(q)) or np.max(np.abs(q)) > 1e150:
            raise EscapedDomain("backward orbit escaped", m=len(out) + 1)
        out.append(q)
    return np.array(out)


def center_direction(F, p, tol: float = 1e-10, m_max: int = 64, history=None) -> DirectionEstimate:
    """Most contracted direction of DF^{-m}(p), m doubling until converged."""
    if getattr(F, "b", None) == 0 and getattr(F, "canonical", False):
        raise NotADiffeomorphism("b = 0 map is not invertible")
    cache = {}

    def mats(m):
        if m not in cache:
            back = backward_orbit(F, p, m, history)
            cache[m] = np.linalg.inv(F.jacobian(back))
        return cache[m]

    return _doubling(mats, tol, m_max)
