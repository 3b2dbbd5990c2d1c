"""Period-doubling cascade of the canonical family by orbit continuation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BisectionFailed
from .henon import period_doubling_parameter

FEIGENBAUM_DELTA = 4.669201609


def orbit_jac(a, b, x, y, R):
    """F^R(x, y) and DF^R for the canonical family (scalar fast path)."""
    j00, j01, j10, j11 = 1.0, 0.0, 0.0, 1.0
    for _ in range(R):
        m = -2.0 * x
        j00, j01, j10, j11 = m * j00 - b * j10, m * j01 - b * j11, j00, j01
        x, y = a - x * x - b * y, x
    return x, y, j00, j01, j10, j11


def periodic_orbit(a, b, p, R, tol=1e-10, maxiter=40):
    """Newton for F^R(p) = p; returns (p, DF^R) or None.

    Once the step drops below ``tol`` two polishing steps are taken; the
    residual then sits at the roundoff floor of the orbit.
    """
    x, y = float(p[0]), float(p[1])
    polish = None
    for _ in range(maxiter):
        X, Y, j00, j01, j10, j11 = orbit_jac(a, b, x, y, R)
        r0, r1 = X - x, Y - y
        m00, m11 = j00 - 1.0, j11 - 1.0
        det = m00 * m11 - j01 * j10
        if det == 0 or not math.isfinite(det):
            return None
        dx = (m11 * r0 - j01 * r1) / det
        dy = (-j10 * r0 + m00 * r1) / det
        x, y = x - dx, y - dy
        if not (math.isfinite(x) and abs(x) < 10):
            return None
        if polish is None and max(abs(dx), abs(dy)) < tol * max(1.0, abs(x), abs(y)):
            polish = 2
        if polish is not None:
            if polish == 0:
                _, _, *J = orbit_jac(a, b, x, y, R)
                return np.array([x, y]), np.array(J).reshape(2, 2)
            polish -= 1
    return None


def _flip_fn(J):
    return 1.0 + np.trace(J) + np.linalg.det(J)


def _trace_fn(J):
    return float(np.trace(J))


@dataclass
class CascadeLevel:
    n: int
    a_n: float      # birth of the period-2^n orbit
    s_n: float      # its superstable (zero-trace) parameter
    orbit_point: np.ndarray = field(repr=False, default=None)  # periodic point at s_n

    @property
    def period(self):
        return 2 ** self.n


@dataclass
class Cascade:
    b: float
    levels: list
    a_next: float = float("nan")  # flip of the deepest orbit, if reached
    complete: bool = True
    error: str = ""

    @property
    def s(self):
        return np.array([lv.s_n for lv in self.levels])

    @property
    def a(self):
        return np.array([lv.a_n for lv in self.levels])

    def deltas(self):
        """delta_n = (s_n - s_{n-1}) / (s_{n+1} - s_n), keyed by n."""
        s = self.s
        return {k + 2: (s[k + 1] - s[k]) / (s[k + 2] - s[k + 1]) for k in range(len(s) - 2)}

    def accumulation(self):
        s = self.s
        if len(s) < 3:
            return float("nan")
        d = (s[-2] - s[-3]) / (s[-1] - s[-2])
        return float(s[-1] + (s[-1] - s[-2]) / (d - 1.0))

    def gap_delta(self, use="s", k=3):
        """Ratio estimate from the last ``k`` parameter gaps: sqrt(g_first / g_last)."""
        v = self.s if use == "s" else self.a
        g = np.diff(v)[-(k):]
        if len(g) < k:
            return float("nan")
        return float((g[0] / g[-1]) ** (1.0 / (k - 1)))

    def to_dict(self):
        d = self.deltas()
        return {"b": self.b, "complete": self.complete, "error": self.error,
                "levels": [{"n": lv.n, "a_n": lv.a_n, "s_n": lv.s_n, "delta_n": d.get(lv.n)}
                           for lv in self.levels],
                "a_inf_estimate": self.accumulation()}


def _seed(a, b, p_old, v, R, da):
    """Period-R orbit born from the flip of the period-R/2 orbit at p_old."""
    amp = math.sqrt(max(da, 1e-300))
    for c in (1.0, 0.5, 2.0, 0.25, 4.0, 0.1, 8.0, 16.0):
        for sgn in (1.0, -1.0):
            res = periodic_orbit(a, b, p_old + sgn * c * amp * v, R)
            if res is None:
                continue
            p, J = res
            h = orbit_jac(a, b, p[0], p[1], R // 2)
            sep = math.hypot(h[0] - p[0], h[1] - p[1])
            if sep > 1e-3 * c * amp and abs(_flip_fn(J)) < 4.0:
                return p, J
    return None


def find_cascade(b: float, n_max: int, steps_per_gap: int = 60) -> Cascade:
    """Birth and superstable parameters of the period-2^n orbits, n = 1..n_max."""
    if not 0.0 <= b <= 0.3:
        raise ValueError("b must lie in [0, 0.3]")
    if not 1 <= n_max <= 8:
        raise ValueError("n_max must lie in 1..8")
    a_birth = period_doubling_parameter(b)
    xs = 0.5 * (1.0 + b)
    p_old = np.array([xs, xs])
    J_old = np.array([[-2 * xs, -b], [1.0, 0.0]])
    gap = 0.5
    prev_gap = None
    levels = []
    out = Cascade(b, levels)
    for n in range(1, n_max + 1):
        R = 2 ** n
        w, V = np.linalg.eig(J_old)
        v = np.real(V[:, np.argmin(np.abs(w + 1))])
        v /= np.hypot(*v)
        da = 0.02 * gap
        seed = _seed(a_birth + da, b, p_old, v, R, da)
        if seed is None:
            out.complete, out.error = False, f"seeding failed at n={n}"
            if levels:
                return out
            raise BisectionFailed(out.error, n=n, last_good=n - 1)
        a, (p, J) = a_birth + da, seed
        hist = [(a, p, J)]
        last = n == n_max
        step = gap / steps_per_gap
        s_n = a_next = None
        tries = 0
        while True:
            res = periodic_orbit(a + step, b, p, R)
            if res is None:
                step *= 0.5
                tries += 1
                if tries > 30:
                    break
                continue
            a += step
            p, J = res
            hist.append((a, p, J))
            if s_n is None and _trace_fn(J) <= 0:
                s_n = _bisect(hist, b, R, _trace_fn)
                if last:
                    break
            if s_n is not None and _flip_fn(J) <= 0:
                a_next = _bisect(hist, b, R, _flip_fn)
                break
            if len(hist) > 40 * steps_per_gap:
                break
        if s_n is None or (not last and a_next is None):
            out.complete, out.error = False, f"continuation failed at n={n}"
            if levels:
                return out
            raise BisectionFailed(out.error, n=n, last_good=n - 1)
        ps = periodic_orbit(s_n, b, p, R)
        levels.append(CascadeLevel(n, a_birth, s_n, None if ps is None else ps[0]))
        if last:
            break
        res = periodic_orbit(a_next, b, hist[-1][1], R)
        p_old, J_old = res
        prev_gap, gap = a_next - a_birth, (a_next - a_birth) / FEIGENBAUM_DELTA
        a_birth = a_next
        out.a_next = a_next
    return out


def _bisect(hist, b, R, fn):
    (a0, p0, J0), (a1, p1, J1) = hist[-2], hist[-1]

    def g(a):
        res = periodic_orbit(a, b, p0, R)
        if res is None:
            raise BisectionFailed("orbit lost during bisection")
        return fn(res[1])

    if fn(J0) * fn(J1) > 0:
        raise BisectionFailed("bracket lost")
    return brentq(g, a0, a1, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def superstable_1d(R: int, lo: float, hi: float) -> float:
    """Superstable parameter of x -> a - x^2 with f_a^R(0) = 0 inside [lo, hi]."""
    def g(a):
        x = 0.0
        for _ in range(R):
            x = a - x * x
        return x

    return brentq(g, lo, hi, xtol=1e-15)
