"""One-dimensional reduction of the cascade and the interval distortion toolkit.

Every depth-m valuable projection slides a point along its depth-m leaf onto
the genuine horizontal through the critical value v0, so all projected arcs
live on one line and are handled there as parameter intervals.  The
parameter t is the signed distance from v0 along that line, oriented so that
the first return of v0 lands at t > 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (DegenerateConfiguration, HypothesisFailed, KoebeBoundExceeded,
                     NotDiffeomorphic, NotInjectiveOnCurve, OutOfDomain, OverlapDetected)
from .geometry import Curve, arc_length_parameterize
from .renorm import CenteredChart, RenormSequence

PAD_FRAC = 0.25
DIS_NODES = 1025


# ---------------------------------------------------------------- projections

class IdentityChart:
    center = None

    def apply(self, p):
        return np.asarray(p, float)

    def invert(self, z):
        return np.asarray(z, float)


@dataclass(eq=False)
class ProjectionHandle:
    depth: int
    kind: str                       # "value" or "critical"
    chart_ref: object               # anything with apply / invert
    graph_ref: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("value", "critical"):
            raise ValueError(f"unknown projection kind {self.kind!r}")
        if self.kind == "critical" and self.graph_ref is None:
            raise ValueError("critical projection needs a graph")


def _finite_or_raise(q, what):
    if not np.all(np.isfinite(q)):
        raise OutOfDomain(f"{what} left the chart domain")
    return q


def project_value(handle: ProjectionHandle, p):
    """Horizontal projection in the chart: (x, y) -> (x, 0)."""
    z = handle.chart_ref.apply(p)
    z = np.stack([z[..., 0], np.zeros_like(z[..., 0])], -1)
    return _finite_or_raise(handle.chart_ref.invert(z), "value projection")


def project_critical(handle: ProjectionHandle, p):
    """Projection along chart verticals onto the graph y = g(x)."""
    z = handle.chart_ref.apply(p)
    z = np.stack([z[..., 0], handle.graph_ref(z[..., 0])], -1)
    return _finite_or_raise(handle.chart_ref.invert(z), "critical projection")


def value_projection(seq: RenormSequence, n: int, center) -> ProjectionHandle:
    return ProjectionHandle(n, "value", CenteredChart(seq.ret(n).domain.level, np.asarray(center, float)))


def critical_projection(curve_pts) -> ProjectionHandle:
    """Critical projection onto a curve that is a graph over x.

    The verticals of the critical chart are genuine vertical lines (its first
    coordinate depends on p_x only), so the graph is kept in plain coordinates.
    """
    pts = np.asarray(curve_pts, float)
    order = np.argsort(pts[:, 0])
    xs, ys = pts[order, 0], pts[order, 1]
    if np.any(np.diff(xs) <= 0):
        raise NotInjectiveOnCurve("curve is not a graph over x")
    return ProjectionHandle(0, "critical", IdentityChart(), CubicSpline(xs, ys))


# ---------------------------------------------------------------- index algebra

@dataclass(frozen=True)
class HatHIndex:
    i: int
    j: int
    digits: tuple
    depth_n: int     # level of the leading digit

    def reconstruct(self, periods):
        return self.j + sum(a * R for a, R in zip(self.digits, periods))


def decompose_index(i: int, periods: Sequence[int], ratios: Optional[Sequence[int]] = None) -> HatHIndex:
    """i = j + a_0 R_0 + ... + a_n R_n with the leading digit in [2, 2 r_n)."""
    periods = list(periods)
    R0 = periods[0]
    if i < 0:
        raise ValueError("index must be non-negative")
    if i < 2 * R0:
        return HatHIndex(i, i % R0, (i // R0,), 0)
    n = max(k for k, R in enumerate(periods) if i >= 2 * R)
    digits = [0] * (n + 1)
    rem = i
    for m in range(n, -1, -1):
        digits[m] = rem // periods[m]
        rem -= digits[m] * periods[m]
    return HatHIndex(i, rem, tuple(digits), n)


def reconstruct(idx: HatHIndex, periods) -> int:
    return idx.reconstruct(periods)


# ---------------------------------------------------------------- tower

class Tower:
    """Levels of a renormalization sequence seen from the critical value v0."""

    def __init__(self, seq: RenormSequence, v0, levels: Optional[Sequence[int]] = None):
        self.seq = seq
        self.F = seq.F
        self.v0 = np.asarray(v0, float)
        self.y0 = float(self.v0[1])
        self.levels = list(seq.exposed_depths if levels is None else levels)
        self.periods = [seq.ret(d).period for d in self.levels]
        self.ratios = [self.periods[k + 1] // self.periods[k] for k in range(len(self.periods) - 1)]
        vR = self.F.iterate_points(self.v0, self.periods[0])
        self.sigma = 1.0
        self.sigma = 1.0 if self.coord(0, vR) > 0 else -1.0

    def level(self, k):
        return self.seq.ret(self.levels[k]).domain.level

    def domain(self, k):
        return self.seq.ret(self.levels[k]).domain

    def proj_x(self, k, p):
        """x where the level-k leaf through p meets the line y = y0."""
        p = np.asarray(p, float)
        lev = self.level(k)
        X = lev.phi1(p)
        return lev.leaf_x(X, np.full(X.shape, self.y0), x0=p[..., 0] - lev.slope * (p[..., 1] - self.y0))

    def coord(self, k, p):
        return self.sigma * (self.proj_x(k, p) - self.v0[0])

    def line(self, t):
        t = np.asarray(t, float)
        return np.stack([self.v0[0] + self.sigma * t, np.full(t.shape, self.y0)], -1)

    def section(self, k):
        """Parameter interval of the section I^k_0 of the level-k box."""
        dom = self.domain(k)
        xa = dom.level.leaf_x(np.array(dom.I_X), np.full(2, self.y0))
        t = np.sort(self.sigma * (xa - self.v0[0]))
        return float(t[0]), float(t[1])

    def hatH(self, idx: HatHIndex, force_projection: bool = False):
        return HatH(self, idx, force_projection)


class HatH:
    """The composed map F^j o (P_{n0} o F^{a_{n0} R_{n0}}) o ... o (P_n o F^{a_n R_n})."""

    def __init__(self, tower: Tower, idx: HatHIndex, force_projection: bool = False):
        self.tower, self.idx = tower, idx
        self.plain = idx.i < 2 * tower.periods[0] and not (force_projection and idx.i >= tower.periods[0])

    def to_line(self, p):
        """Point on the line (parameter t) reached before the final F^j."""
        T, idx = self.tower, self.idx
        q = np.asarray(p, float)
        for m in range(len(idx.digits) - 1, -1, -1):
            q = T.F.iterate_points(q, idx.digits[m] * T.periods[m])
            t = T.coord(m, q)
            if not np.all(np.isfinite(t)):
                raise OutOfDomain(f"projection at level {m} failed", stage=m)
            q = T.line(t)
        return q

    def __call__(self, p):
        if self.plain:
            return self.tower.F.iterate_points(np.asarray(p, float), self.idx.i)
        return self.tower.F.iterate_points(self.to_line(p), self.idx.j)


def build_hatH(seq_or_tower, idx: HatHIndex, v0=None) -> HatH:
    tower = seq_or_tower if isinstance(seq_or_tower, Tower) else Tower(seq_or_tower, v0)
    return HatH(tower, idx)


# ---------------------------------------------------------------- arc families

@dataclass(eq=False)
class ArcFamily:
    depth: int
    arcs: Dict[int, Curve]
    neighbors: Dict[int, Tuple[Optional[int], Optional[int]]]
    hulls: Dict[int, Curve]
    padded: Dict[int, Curve]
    chi: List[int]
    intervals: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    residues: Dict[int, int] = field(default_factory=dict)
    pads: Dict[int, Tuple[float, float]] = field(default_factory=dict)   # (pad used, gap available)
    max_overlap: int = 0
    section_length: float = 0.0
    containment_dev: float = 0.0

    def total_padded_length(self, start: int) -> float:
        return float(sum(c.length for i, c in self.padded.items() if i >= start))


def _image_curve(tower, j, lo, hi, n=257):
    return Curve.from_samples(tower.F.iterate_points(tower.line(np.linspace(lo, hi, n)), j))


def _arc_interval(tower, k, i, n=65):
    """Parameter interval on the line of the arc with index i at level k."""
    lo, hi = tower.section(k)
    pts = tower.line(np.linspace(lo, hi, n))
    idx = decompose_index(i, tower.periods)
    if i < tower.periods[0]:
        return (lo, hi), i, idx
    H = HatH(tower, idx, force_projection=True)
    t = tower.sigma * (H.to_line(pts)[:, 0] - tower.v0[0])
    if np.any(np.diff(t) == 0) or not (np.all(np.diff(t) > 0) or np.all(np.diff(t) < 0)):
        raise NotInjectiveOnCurve(f"arc {i} folds on the line", index=i)
    return (float(t.min()), float(t.max())), idx.j, idx


def _deviation(tower, j, pts, lo, hi):
    """Distance from points to the curve F^j(line[lo, hi]) by a parameter Newton solve."""
    if j == 0:
        return float(np.max(np.abs(pts[:, 1] - tower.y0)))
    ts = np.linspace(lo, hi, 513)
    curve = tower.F.iterate_points(tower.line(ts), j)
    k = np.argmin(np.linalg.norm(curve[None, :, :] - pts[:, None, :], axis=-1), axis=1)
    t = ts[k]
    for _ in range(8):
        q, J = tower.F.cocycle(tower.line(t), j)
        d = J @ np.array([tower.sigma, 0.0])
        t = t + np.sum((pts - q) * d, -1) / np.sum(d * d, -1)
    q = tower.F.iterate_points(tower.line(t), j)
    return float(np.max(np.linalg.norm(pts - q, axis=-1)))


def build_arc_family(tower: Tower, k: int, pad_frac: float = PAD_FRAC, strict: bool = True) -> ArcFamily:
    """Arcs J_i = H_i(I^k_0), i < R_k, with neighbours, hulls and padded hulls."""
    if k < 1:
        raise ValueError("arc families start one level above the base")
    R0, Rk = tower.periods[0], tower.periods[k]
    intervals, residues, tops = {}, {}, {}
    for i in range(Rk):
        (lo, hi), j, idx = _arc_interval(tower, k, i)
        intervals[i], residues[i], tops[i] = (lo, hi), j, idx.depth_n
    by_res: Dict[int, List[int]] = {}
    for i in range(Rk):
        by_res.setdefault(residues[i], []).append(i)
    neighbors, pads = {}, {}
    for j, members in by_res.items():
        members.sort(key=lambda i: intervals[i][0])
        for a, b in zip(members, members[1:]):
            if intervals[a][1] >= intervals[b][0]:
                if strict:
                    raise OverlapDetected(f"arcs {a} and {b} overlap", i=a, k=b)
        for pos, i in enumerate(members):
            neighbors[i] = (members[pos - 1] if pos > 0 else None,
                            members[pos + 1] if pos + 1 < len(members) else None)
    arcs, hulls, padded = {}, {}, {}
    hull_iv = {}
    sec_lo, sec_hi = tower.section(0)
    dev = 0.0
    for i in range(Rk):
        j = residues[i]
        lo, hi = intervals[i]
        arcs[i] = _image_curve(tower, j, lo, hi)
        if i >= 2 * R0 or i < R0:
            dev = max(dev, _deviation(tower, j, arcs[i].samples[::32], sec_lo, sec_hi))
        left, right = neighbors[i]
        ends = [lo, hi] + [v for nb in (left, right) if nb is not None for v in intervals[nb]]
        hlo, hhi = min(ends), max(ends)
        hull_iv[i] = (hlo, hhi)
        hulls[i] = _image_curve(tower, j, hlo, hhi)
        gaps = [intervals[i][0] - intervals[left][1]] if left is not None else []
        gaps += [intervals[right][0] - intervals[i][1]] if right is not None else []
        gap = min(gaps) if gaps else 0.0
        pad = pad_frac * gap
        pads[i] = (pad, gap)
        if tops[i] < k - 1:
            plo, phi = hlo - pad, hhi + pad
        else:
            plo, phi = hlo + pad, hhi - pad
        padded[i] = _image_curve(tower, j, plo, phi) if phi > plo else _image_curve(tower, j, hlo, hhi)
    # maximal overlap among hulls (sweep line per residue)
    max_ov = 0
    for j, members in by_res.items():
        ev = []
        for i in members:
            if i >= 2 * R0:
                ev += [(hull_iv[i][0], 1), (hull_iv[i][1], -1)]
        ev.sort(key=lambda e: (e[0], -e[1]))
        cur = 0
        for _, d in ev:
            cur += d
            max_ov = max(max_ov, cur)
    chi = _chi(tower, k)
    return ArcFamily(k, arcs, neighbors, hulls, padded, chi, intervals, residues, pads, max_ov,
                     _image_curve(tower, 0, sec_lo, sec_hi).length, dev)


def _chi(tower, k):
    """For each level m < k: the index c with J_{c R_m} the nearest arc above J_0 (level m + 1 arcs)."""
    out = []
    for m in range(min(k, len(tower.periods) - 1)):
        Rm, q = tower.periods[m], tower.ratios[m]
        iv = {c: _arc_interval(tower, m + 1, c * Rm)[0] for c in range(q)}
        above = [c for c in range(1, q) if iv[c][0] > iv[0][1]]
        out.append(min(above, key=lambda c: iv[c][0]) if above else -1)
    return out


def check_arc_order(tower: Tower, k: int, s: int):
    """J^{k+s}_0 < J^{k+s}_{c R_k} < J^{k+s}_{R_k} along the base section for 1 < c < R_{k+s}/R_k."""
    q = tower.periods[k + s] // tower.periods[k]
    Rk = tower.periods[k]
    iv = lambda i: _arc_interval(tower, k + s, i)[0]
    first, last = iv(0), iv(Rk)
    bad = []
    for c in range(2, q):
        mid = iv(c * Rk)
        if not (first[1] < mid[0] and mid[1] < last[0]):
            bad.append(c)
    return not bad, bad


# ---------------------------------------------------------------- 1D-like structure

@dataclass
class StructureResult:
    ok: bool
    disjoint: bool
    ordered: bool
    mapped: bool
    pad: float
    a: list
    b: list
    margins: list
    failures: list

    def to_dict(self):
        return dict(self.__dict__)


def check_1dlike_structure(tower: Tower, k: int, s: int = 1, pad: Optional[float] = None,
                           pad_frac: float = PAD_FRAC, n_grid: int = 24) -> StructureResult:
    """The three conditions of 1D-like structure of depth s for level k."""
    if s not in (1, 2):
        raise ValueError("s must be 1 or 2")
    if k + s >= len(tower.periods):
        raise ValueError("level k + s is not available")
    if min(tower.ratios[k:k + s]) < 3:
        return StructureResult(False, False, False, False, 0.0, [], [], [], [{"code": "not_applicable"}])
    F = tower.F
    Rn = tower.periods[k]
    q = tower.periods[k + s] // Rn
    orbit = F.orbit_points(tower.v0, 2 * q * Rn)
    a = [float(tower.coord(k, orbit[c * Rn])) for c in range(2 * q)]
    a[0] = 0.0
    b = [a[c + q] for c in range(q)]
    ivs = [(min(a[c], b[c]), max(a[c], b[c])) for c in range(q)]
    failures = []
    order = sorted(range(q), key=lambda c: ivs[c][0])
    gaps = [ivs[order[c + 1]][0] - ivs[order[c]][1] for c in range(q - 1)]
    if pad is None:
        pos = [g for g in gaps if g > 0]
        pad = pad_frac * min(pos) if pos else 0.0
    padded = [(lo - pad, hi + pad) for lo, hi in ivs]
    disjoint = True
    for l in range(q):
        for c in range(l + 1, q):
            if padded[l][1] > padded[c][0] and padded[c][1] > padded[l][0]:
                disjoint = False
                failures.append({"code": "overlap", "condition": 1, "pair": [l, c]})
    ordered = 0.0 == a[0] < b[0] < b[1] < a[1]
    for c in range(2, q):
        if not (b[0] < min(a[c], b[c]) and max(a[c], b[c]) < b[1]):
            ordered = False
            failures.append({"code": "order", "condition": 2, "k": c})
    if not 0.0 < b[0] < b[1] < a[1]:
        failures.append({"code": "order", "condition": 2, "k": 0})
    # (iii): image of each padded strip inside the next padded strip
    dom = tower.domain(k)
    lev = dom.level
    margins = []
    mapped = True
    for c in range(q):
        lo, hi = padded[c]
        xs = tower.line(np.linspace(lo, hi, n_grid))
        Xs = lev.phi1(xs)
        Y = np.linspace(*dom.I_Y, n_grid)
        Z = np.stack(np.meshgrid(Xs, Y, indexing="ij"), -1).reshape(-1, 2)
        pts = lev.from_henon(Z)
        img = F.iterate_points(pts, Rn)
        t = tower.coord(k, img)
        tlo, thi = padded[(c + 1) % q]
        mg = float(np.min(np.minimum(t - tlo, thi - t)))
        inside = bool(np.all(dom.contains(img)))
        margins.append(mg if inside else -abs(mg))
        if not (mg > 0 and inside):
            mapped = False
            failures.append({"code": "escape", "condition": 3, "k": c, "margin": mg})
    return StructureResult(disjoint and ordered and mapped, disjoint, ordered, mapped, pad,
                           a[:q + 1], b, margins, failures)


# ---------------------------------------------------------------- distortion along curves

def _speeds(G, curve: Curve, n: int):
    c = arc_length_parameterize(curve, n)
    s = c.cumulative_length
    img = np.asarray(G(c.samples), float)
    if not np.all(np.isfinite(img)):
        raise OutOfDomain("map undefined on part of the curve")
    ch = np.diff(img, axis=0)
    if np.any(np.hypot(*ch.T) == 0) or np.any(np.sum(ch[1:] * ch[:-1], -1) <= 0):
        raise NotInjectiveOnCurve("image chain stalls or folds back")
    d = np.gradient(img, s, axis=0, edge_order=2)
    return np.hypot(d[:, 0], d[:, 1]), img


def distortion_along_curve(G: Callable, curve: Curve, n: int = DIS_NODES) -> float:
    """sup/inf of |G'| along the curve in arc-length parameterization."""
    sp, _ = _speeds(G, curve, n)
    return float(np.max(sp) / np.min(sp))


# ---------------------------------------------------------------- cross-ratios

def _iv(I):
    a, b = float(I[0]), float(I[1])
    return (a, b) if a <= b else (b, a)


def cross_ratio(I, J) -> float:
    """|I||J| / (|L||R|) for J inside I."""
    a, d = _iv(I)
    b, c = _iv(J)
    L, R = b - a, d - c
    if L <= 0 or R <= 0 or c <= b:
        raise DegenerateConfiguration("J must sit strictly inside I", L=L, R=R)
    return (d - a) * (c - b) / (L * R)


def crd(f: Callable, I, J) -> float:
    a, d = _iv(I)
    b, c = _iv(J)
    fa, fb, fc, fd = (float(f(v)) for v in (a, b, c, d))
    if fd < fa:
        fa, fb, fc, fd = fd, fc, fb, fa
    return cross_ratio((fa, fd), (fb, fc)) / cross_ratio((a, d), (b, c))


def nested_pairs(I, n: int, rng) -> List[tuple]:
    a, d = _iv(I)
    u = np.sort(rng.uniform(a, d, size=(n, 4)), axis=1)
    return [((p[0], p[3]), (p[1], p[2])) for p in u if p[0] < p[1] < p[2] < p[3]]


def min_crd(f, I, n: int = 200, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    return float(min(crd(f, P, Q) for P, Q in nested_pairs(I, n, rng)))


# ---------------------------------------------------------------- Denjoy and Koebe

def _derivs(f, x, h):
    f1 = (f(x + h) - f(x - h)) / (2 * h)
    f2 = (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
    return f1, f2


def denjoy_bound(f: Callable, J, n: int, df: Optional[Callable] = None, d2f: Optional[Callable] = None,
                 m: int = 513, h: float = 1e-4):
    """(log Dis(f^n, J), K * sum |f^i(J)|) with K = sup|f''| / inf|f'| over the iterates."""
    lo, hi = _iv(J)
    xs = np.linspace(lo, hi, m)
    pts = xs.copy()
    logd = np.zeros_like(xs)
    total, sup2, inf1 = 0.0, 0.0, math.inf
    for _ in range(n):
        iv = np.linspace(pts.min(), pts.max(), m)
        d1, d2 = _derivs(f, iv, h)
        if df is not None:
            d1 = df(iv)
        if d2f is not None:
            d2 = d2f(iv)
        if np.any(np.sign(d1) != np.sign(d1[0])) or np.any(d1 == 0):
            raise NotDiffeomorphic("f' vanishes or changes sign on an iterate")
        sup2 = max(sup2, float(np.max(np.abs(d2))))
        inf1 = min(inf1, float(np.min(np.abs(d1))))
        total += float(pts.max() - pts.min())
        g1 = df(pts) if df is not None else _derivs(f, pts, h)[0]
        logd += np.log(np.abs(g1))
        pts = f(pts)
    lhs = float(np.max(logd) - np.min(logd))
    return lhs, sup2 / inf1 * total


def koebe_constant(nu: float, tau: float) -> float:
    return ((1.0 + tau) / tau) ** 2 / nu


def dis_1d(f: Callable, J, m: int = 2049) -> float:
    lo, hi = _iv(J)
    xs = np.linspace(lo, hi, m)
    d = np.gradient(f(xs), xs, edge_order=2)
    if np.any(d == 0) or not (np.all(d > 0) or np.all(d < 0)):
        raise NotDiffeomorphic("f is not monotone on J")
    d = np.abs(d)
    return float(d.max() / d.min())


def koebe_check(f: Callable, I, J, nu: Optional[float] = None, tau: Optional[float] = None,
                n_pairs: int = 200, seed: int = 0):
    """Measured Dis(f, J) and the applied bound K(nu, tau); raises when the bound is beaten."""
    a, d = _iv(I)
    b, c = _iv(J)
    if not a < b < c < d:
        raise HypothesisFailed("J must sit strictly inside I", hypothesis="nesting")
    nu_m = min_crd(f, I, n_pairs, seed)
    if nu is None:
        nu = nu_m
    elif nu_m < nu * (1 - 1e-12):
        raise HypothesisFailed(f"measured CrD {nu_m!r} below nu", hypothesis="crd", measured=nu_m)
    if not nu > 0:
        raise HypothesisFailed("non-positive cross-ratio bound", hypothesis="crd")
    fa, fb, fc, fd = sorted(float(f(v)) for v in (a, b, c, d))
    fJ = fc - fb
    space = min(fb - fa, fd - fc) / fJ
    if tau is None:
        tau = space
    elif space < tau * (1 - 1e-12):
        raise HypothesisFailed(f"image space {space!r} below tau", hypothesis="space", measured=space)
    dis = dis_1d(f, J)
    K = koebe_constant(nu, tau)
    if dis > K:
        raise KoebeBoundExceeded(f"Dis {dis!r} exceeds K {K!r}", dis=dis, K=K)
    return dis, K


# ---------------------------------------------------------------- report

@dataclass
class DistortionReport:
    per_depth: list
    crd_min: float
    koebe_K: float
    total_padded_length: float
    findings: list = field(default_factory=list)
    length_fit: dict = field(default_factory=dict)

    def to_dict(self):
        return {"per_depth": self.per_depth, "crd_min": self.crd_min, "koebe_K": self.koebe_K,
                "total_padded_length": self.total_padded_length, "findings": self.findings,
                "length_fit": self.length_fit}

    def series(self, key):
        return [d[key] for d in self.per_depth]


def _arc_map(H: HatH, tower: Tower, lo, hi):
    """H restricted to the section as a 1D map t -> arc length along the image."""
    ts = np.linspace(lo, hi, 513)
    img = H(tower.line(ts))
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(img, axis=0).T))])
    return CubicSpline(ts, s)


def fit_length_envelope(ratios: Sequence[float], lam: float):
    """Smallest-width envelope rho^i / C <= ratio_i <= C rho^{-i} over a rho grid."""
    r = np.log(np.asarray(ratios, float))
    i = np.arange(len(r))
    best = None
    for rho in np.linspace(max(lam, 1e-6) + 1e-9, 1.0, 400):
        lc = float(np.max(np.abs(r) + i * math.log(rho)))
        width = lc - (len(r) - 1) * math.log(rho)
        if best is None or width < best[0]:
            best = (width, rho, math.exp(lc))
    return {"C_fit": best[2], "rho": best[1], "rho_gt_lam": bool(best[1] > lam)}


def verify_bounds(tower: Tower, charts=None, seq: Optional[RenormSequence] = None, k_max: Optional[int] = None,
                  k_min: int = 1, pad_frac: float = PAD_FRAC, n_pairs: int = 8, seed: int = 0) -> DistortionReport:
    """Distortion of returns, H-maps and first-entry maps over tower levels k_min..k_max."""
    from .critical import first_entry_map

    F = tower.F
    k_max = len(tower.periods) - 1 if k_max is None else k_max
    rng = np.random.default_rng(seed)
    per, findings = [], []
    crd_vals, space, padded_tot, ratios_last = [], [], 0.0, []
    R0 = tower.periods[0]
    for k in range(k_min, k_max + 1):
        Rk = tower.periods[k]
        lo, hi = tower.section(k)
        sec = Curve.from_samples(tower.line(np.linspace(lo, hi, 257)))
        entry = {"n": tower.levels[k], "period": Rk}
        try:
            entry["dis_return"] = distortion_along_curve(lambda p: F.iterate_points(p, Rk), sec)
            dmax, lengths = 1.0, []
            for i in range(Rk):
                H = HatH(tower, decompose_index(i, tower.periods))
                dmax = max(dmax, distortion_along_curve(H, sec))
                lengths.append(Curve.from_samples(H(sec.samples)).length / sec.length)
                if i >= 1:
                    sm = _arc_map(H, tower, lo, hi)
                    for P, Q in nested_pairs((lo, hi), n_pairs, rng):
                        crd_vals.append(crd(sm, P, Q))
            entry["dis_hatH_max"] = dmax
            ratios_last = lengths
            if charts is not None and seq is not None:
                fe = first_entry_map(seq, charts, tower.levels[k])
                hs = fe.h_samples
                entry["dis_hn"] = dis_1d(hs, hs.interval)
            fam = build_arc_family(tower, k, pad_frac, strict=False)
            padded = fam.total_padded_length(2 * R0)
            entry["total_padded_length"] = padded
            entry["max_overlap"] = fam.max_overlap
            entry["section_length"] = fam.section_length
            padded_tot = max(padded_tot, padded)
            last = Rk - 1
            ln, rn = fam.neighbors[last]
            lo_l, hi_l = fam.intervals[last]
            gaps = [lo_l - fam.intervals[ln][1]] if ln is not None else []
            gaps += [fam.intervals[rn][0] - hi_l] if rn is not None else []
            if gaps:
                space.append(min(gaps) / (hi_l - lo_l))
        except Exception as exc:  # partial report on failure
            findings.append({"n": tower.levels[k], "code": getattr(exc, "code", type(exc).__name__),
                             "message": str(exc)})
        per.append(entry)
    crd_min = float(min(crd_vals)) if crd_vals else float("nan")
    tau = float(min(space)) if space else float("nan")
    koebe_K = koebe_constant(crd_min, tau) if crd_vals and space and crd_min > 0 else float("nan")
    lam = float(getattr(F, "b", 0.0) or 0.0)
    fit = fit_length_envelope(ratios_last, abs(lam)) if ratios_last else {}
    return DistortionReport(per, crd_min, koebe_K, padded_tot, findings, fit)
