"""Finite-scale (L, eps, lam)-regularity checks and return certificates.

Every inequality is handled in log form.  For a ratio r_m and parameters
(L, eps, lam) the two slacks are

    lower:  log r_m + log L - (1 + eps) m log lam
    upper:  log L + (1 - eps) m log lam - log r_m

and a check passes when every slack is nonnegative.  The margin reported is
the smallest slack over all (m, s, side).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import CocycleOverflow, InsufficientLength, NoFit
from .geometry import DirectionP
from .henon import OrbitSegment

LOG_OVERFLOW = math.log(1e300)
MAX_FIT_L = 1e12


@dataclass(frozen=True)
class RegularityParams:
    L: float
    eps: float
    lam: float
    M: int

    def __post_init__(self):
        if not self.L >= 1.0:
            raise ValueError("L must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        if self.M < 1:
            raise ValueError("M must be positive")


# ---------------------------------------------------------------- log cocycles

def _unit(E):
    v = E.vector if isinstance(E, DirectionP) else np.asarray(E, float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def propagate(mats, v):
    """log ||A_m ... A_1 v|| for m = 1..len(mats), with renormalization.

    ``mats`` has shape (M, ..., 2, 2) and ``v`` shape (..., 2).
    """
    v = np.array(v, float)
    out = np.empty((len(mats),) + v.shape[:-1])
    acc = np.zeros(v.shape[:-1])
    for m, A in enumerate(mats):
        v = np.einsum("...ij,...j->...i", A, v)
        nr = np.linalg.norm(v, axis=-1)
        acc = acc + np.log(nr)
        if not np.all(np.isfinite(acc)) or np.any(acc > LOG_OVERFLOW):
            raise CocycleOverflow("cocycle norm exceeds 1e300", m=m + 1)
        v = v / nr[..., None]
        out[m] = acc
    return out, v


def log_jac(mats):
    return np.cumsum(np.log(np.abs(np.linalg.det(mats))), axis=0)


def ratio_logs(kind: str, log_n, log_J):
    """(s, log ratio per m) for each inequality family.

    forward:    ||DF^m|E||^{s+1} / Jac^s,                 s in {0, 1}
    backward:   Jac(F^{-m})^s / ||DF^{-m}|E||^{s+1},       s in {0, 1}
    hforward:   Jac / ||DF^m|E||^s,                       s in {1, 2}
    hbackward:  ||DF^{-m}|E||^s / Jac(F^{-m}),            s in {1, 2}
    """
    if kind == "forward":
        return [(s, (s + 1) * log_n - s * log_J) for s in (0, 1)]
    if kind == "backward":
        return [(s, s * log_J - (s + 1) * log_n) for s in (0, 1)]
    if kind == "hforward":
        return [(s, log_J - s * log_n) for s in (1, 2)]
    if kind == "hbackward":
        return [(s, s * log_n - log_J) for s in (1, 2)]
    raise ValueError(f"unknown inequality family {kind!r}")


def slacks(logr, lam, eps, L):
    m = np.arange(1, len(logr) + 1).reshape((-1,) + (1,) * (np.ndim(logr) - 1))
    ll, lL = math.log(lam), math.log(L)
    lower = logr + lL - (1 + eps) * m * ll
    upper = lL + (1 - eps) * m * ll - logr
    return lower, upper


def required_log_L(logr, lam, eps):
    lo, up = slacks(logr, lam, eps, 1.0)
    return float(max(0.0, -np.min(lo), -np.min(up)))


def _orbit_logs(orbit: OrbitSegment, E, M, backward: bool):
    jac = orbit.jacobians[:M] if not backward else np.linalg.inv(orbit.jacobians[orbit.M - M:][::-1])
    log_n, _ = propagate(jac, _unit(E))
    return log_n, log_jac(jac)


def _check(orbit, E, params, kind, backward):
    M = min(params.M, orbit.M)
    log_n, log_J = _orbit_logs(orbit, E, M, backward)
    margin = np.inf
    for _, r in ratio_logs(kind, log_n, log_J):
        lo, up = slacks(r, params.lam, params.eps, params.L)
        margin = min(margin, float(np.min(lo)), float(np.min(up)))
    return margin >= 0, margin


def check_forward_regular(orbit: OrbitSegment, E, params: RegularityParams):
    """Forward regularity at orbit.points[0] along E."""
    return _check(orbit, E, params, "forward", False)


def check_backward_regular(orbit: OrbitSegment, E, params: RegularityParams):
    """Backward regularity at the orbit end point along E (exact history)."""
    return _check(orbit, E, params, "backward", True)


def check_horizontal_regular(orbit: OrbitSegment, E, params: RegularityParams, side: str = "forward"):
    if side not in ("forward", "backward"):
        raise ValueError("side must be 'forward' or 'backward'")
    return _check(orbit, E, params, "h" + side, side == "backward")


def fit_regularity(orbit: OrbitSegment, E, eps: float, lam: Optional[float] = None,
                   kind: str = "forward") -> RegularityParams:
    """Per-step contraction base and the minimal L closing all inequalities."""
    M = orbit.M
    if M < 4:
        raise InsufficientLength("fit needs M >= 4", M=M)
    backward = kind in ("backward", "hbackward")
    log_n, log_J = _orbit_logs(orbit, E, M, backward)
    fams = ratio_logs(kind, log_n, log_J)
    if lam is None:
        lam = math.exp(fams[0][1][-1] / M)
    if not 0 < lam < 1:
        raise NoFit(f"fitted lam = {lam!r} is not a contraction", lam=lam)
    need = max(required_log_L(r, lam, eps) for _, r in fams)
    if need > math.log(MAX_FIT_L):
        raise NoFit("required L exceeds 1e12", log_L=need)
    return RegularityParams(math.exp(need), eps, lam, M)


# ---------------------------------------------------------------- return certificates

def pullback_vertical_logs(J):
    """Forward log norms along the leaf direction of a Hénon-form return.

    J has shape (R, n, 2, 2): the Jacobians along n orbits of length R.  The
    leaf direction e at p_0 is the one carried onto the vertical at p_{R-1},
    so DF^m e is recovered by pulling the vertical back from p_{R-1}; that is
    the dominant direction of the inverse cocycle and stays well conditioned
    where forward propagation of e would lose it to roundoff.
    Returns (log ||DF^m e||, m = 1..R) and the unit vectors e.
    """
    R = len(J)
    n = J.shape[1]
    lw = np.zeros((R, n))     # lw[k] = log ||DF^{-k}(p_{R-1}) (0, 1)||
    w = np.tile([0.0, 1.0], (n, 1))
    if R > 1:
        logs, w = propagate(np.linalg.inv(J[R - 2::-1]), w)
        lw[1:] = logs
    out = np.empty((R, n))
    out[:R - 1] = lw[R - 2::-1] - lw[R - 1] if R > 1 else out[:0]
    last = np.einsum("nij,j->ni", J[R - 1], [0.0, 1.0])
    out[R - 1] = np.log(np.linalg.norm(last, axis=-1)) - lw[R - 1]
    return out, w


def horizontal_backward_logs(J):
    """log ||DF^{-m}(q) (1, 0)|| and log Jac F^{-m}(q), q = p_R."""
    inv = np.linalg.inv(J[::-1])
    log_n, _ = propagate(inv, np.tile([1.0, 0.0], (J.shape[1], 1)))
    return log_n, log_jac(inv)


@dataclass(eq=False)
class RegularityCertificate:
    forward_ok: bool
    backward_ok: bool
    angle_ok: bool
    min_margin: float
    fitted_L: float
    fitted_lam: float
    angle_min: float
    sample_count: int
    eps: float
    L: float
    M: int
    lam_fitted: bool = True
    failures: list = field(default_factory=list)
    samples: list = field(default_factory=list, repr=False)

    @property
    def passed(self):
        return self.forward_ok and self.backward_ok and self.angle_ok

    def to_dict(self):
        return {"forward_ok": self.forward_ok, "backward_ok": self.backward_ok,
                "angle_ok": self.angle_ok, "min_margin": self.min_margin,
                "fitted_L": self.fitted_L, "fitted_lam": self.fitted_lam,
                "angle_min": self.angle_min, "eps": self.eps, "L": self.L, "M": self.M,
                "lam_fitted": self.lam_fitted, "sample_count": self.sample_count,
                "samples": self.samples, "failures": self.failures}


def sample_domain(domain, n: int, seed: int = 0):
    """Scrambled Sobol points of the domain, drawn in Hénon-form coordinates."""
    sob = qmc.Sobol(2, scramble=True, seed=seed)
    k = int(n).bit_length() - 1
    u = sob.random_base2(k) if n == 1 << k else sob.random(n)
    Z = np.stack([domain.I_X[0] + u[:, 0] * (domain.I_X[1] - domain.I_X[0]),
                  domain.I_Y[0] + u[:, 1] * (domain.I_Y[1] - domain.I_Y[0])], -1)
    return domain.level.from_henon(Z)


def _family_slacks(fams, lam, eps, L):
    """Per-sample minimum slack and the (m, s, side) of the worst entry."""
    best = None
    for s, r in fams:
        lo, up = slacks(r, lam, eps, L)
        for side, arr in (("lower", lo), ("upper", up)):
            if best is None:
                best = [arr.min(0), np.full(arr.shape[1], s), np.argmin(arr, 0) + 1,
                        np.full(arr.shape[1], side, dtype=object)]
                continue
            cur = arr.min(0)
            upd = cur < best[0]
            best[0] = np.where(upd, cur, best[0])
            best[1] = np.where(upd, s, best[1])
            best[2] = np.where(upd, np.argmin(arr, 0) + 1, best[2])
            best[3] = np.where(upd, side, best[3])
    return best


def certify_return(ret, eps: float = 0.25, sample_n: int = 256, seed: int = 0,
                   L: Optional[float] = None, lam: Optional[float] = None,
                   vertical_field: Optional[Callable] = None,
                   record: bool = True) -> RegularityCertificate:
    """Check the three regularity bullets of a Hénon-like return on samples.

    Bullet 1 uses the chart verticals at sampled p, bullet 2 the genuine
    horizontal at q = F^R(p) with the exact orbit as backward history, bullet
    3 the angle between chart vertical and horizontal at p.  ``lam`` defaults
    to the per-step rate fitted over all samples and ``L`` to lam^{-eps}.
    ``vertical_field`` overrides the chart verticals (unit vectors at p).
    """
    dom = getattr(ret, "domain", ret)
    F = dom.level.F
    R = dom.period
    P = sample_domain(dom, sample_n, seed)
    pts = [P]
    J = []
    for _ in range(R):
        J.append(F.jacobian(pts[-1]))
        pts.append(F(pts[-1]))
    J = np.array(J)
    log_J = log_jac(J)
    if vertical_field is None:
        fn, ev = pullback_vertical_logs(J)
    else:
        ev = _unit(vertical_field(P))
        fn, _ = propagate(J, ev)
    bn, bJ = horizontal_backward_logs(J)
    fwd = ratio_logs("forward", fn, log_J)
    bwd = ratio_logs("backward", bn, bJ)
    lam_fitted = lam is None
    if lam is None:
        lam = math.exp(float(np.mean([r[-1] for _, r in fwd + bwd])) / R)
    if not 0 < lam < 1:
        raise NoFit(f"fitted lam = {lam!r} is not a contraction", lam=lam)
    if L is None:
        L = max(1.0, lam ** (-eps))
    need = max(required_log_L(r, lam, eps) for _, r in fwd + bwd)
    fitted_L = math.exp(need)
    f_slack = _family_slacks(fwd, lam, eps, L)
    b_slack = _family_slacks(bwd, lam, eps, L)
    ang = np.abs(np.arctan2(ev[:, 1], ev[:, 0]))
    ang = np.minimum(ang, np.pi - ang)
    angle_min = float(np.min(ang))
    failures = []
    for label, sl in (("forward", f_slack), ("backward", b_slack)):
        for k in np.flatnonzero(sl[0] < 0):
            failures.append({"point": P[k].tolist(), "m": int(sl[2][k]), "s": int(sl[1][k]),
                             "side": f"{label}-{sl[3][k]}"})
    for k in np.flatnonzero(ang <= 1.0 / L):
        failures.append({"point": P[k].tolist(), "m": 0, "s": 0, "side": "angle"})
    samples = []
    if record:
        for k in range(len(P)):
            samples.append({"point": P[k].tolist(), "jacobians": J[:, k].reshape(R, 4).tolist(),
                            "forward_margin": float(f_slack[0][k]),
                            "backward_margin": float(b_slack[0][k]),
                            "angle": float(ang[k]),
                            "vertical": None if vertical_field is None else ev[k].tolist()})
    return RegularityCertificate(
        forward_ok=bool(np.all(f_slack[0] >= 0)), backward_ok=bool(np.all(b_slack[0] >= 0)),
        angle_ok=bool(angle_min > 1.0 / L), min_margin=float(min(f_slack[0].min(), b_slack[0].min())),
        fitted_L=fitted_L, fitted_lam=lam, angle_min=angle_min, sample_count=len(P),
        eps=eps, L=L, M=R, lam_fitted=lam_fitted, failures=failures, samples=samples)


# ---------------------------------------------------------------- independent re-check

def _recheck_sample(jacs, eps, lam, L, vertical):
    """Straight loop re-evaluation of one sample's forward/backward margins."""
    A = [np.array(j, float).reshape(2, 2) for j in jacs]
    R = len(A)
    if vertical is None:
        # leaf direction: the vector DF^{R-1} carries to the vertical,
        # obtained by solving back one step at a time from p_{R-1}
        w = [np.array([0.0, 1.0])]
        for D in reversed(A[:R - 1]):
            w.append(np.linalg.solve(D, w[-1]))
        scale = np.linalg.norm(w[-1])
        e = w[-1] / scale
        fn = [np.log(np.linalg.norm(w[R - 1 - m]) / scale) for m in range(1, R)]
        fn.append(np.log(np.linalg.norm(A[R - 1] @ w[0]) / scale))
    else:
        e = np.array(vertical, float)
        v, fn = e.copy(), []
        for D in A:
            v = D @ v
            fn.append(np.log(np.linalg.norm(v)))
    fJ, acc = [], 0.0
    for D in A:
        acc += np.log(abs(np.linalg.det(D)))
        fJ.append(acc)
    h, bn, bJ, acc = np.array([1.0, 0.0]), [], [], 0.0
    for D in reversed(A):
        Di = np.linalg.inv(D)
        h = Di @ h
        acc += np.log(abs(np.linalg.det(Di)))
        bn.append(np.log(np.linalg.norm(h)))
        bJ.append(acc)
    ll, lL = math.log(lam), math.log(L)

    def worst(ratios):
        out = math.inf
        for r in ratios:
            for m, v in enumerate(r, start=1):
                out = min(out, v + lL - (1 + eps) * m * ll, lL + (1 - eps) * m * ll - v)
        return out

    f0 = fn
    f1 = [2 * a - b for a, b in zip(fn, fJ)]
    b0 = [-a for a in bn]
    b1 = [b - 2 * a for a, b in zip(bn, bJ)]
    ang = abs(math.atan2(e[1], e[0]))
    ang = min(ang, math.pi - ang)
    return worst([f0, f1]), worst([b0, b1]), ang, [f0, f1, b0, b1]


def verify_certificate(cert: dict, tol: float = 1e-9):
    """Recompute every recorded margin from the raw Jacobians; list mismatches."""
    eps, lam, L, M = cert["eps"], cert["fitted_lam"], cert["L"], cert["M"]
    diffs = []
    fams_all = []
    fmin, bmin, amin = math.inf, math.inf, math.inf
    for k, smp in enumerate(cert["samples"]):
        if len(smp["jacobians"]) != M:
            diffs.append(f"sample {k}: expected {M} Jacobians")
            continue
        f, b, a, fams = _recheck_sample(smp["jacobians"], eps, lam, L, smp.get("vertical"))
        fams_all.append(fams)
        for key, val in (("forward_margin", f), ("backward_margin", b), ("angle", a)):
            if not abs(smp[key] - val) <= tol:
                diffs.append(f"sample {k} {key}: recorded {smp[key]!r}, recomputed {val!r}")
        fmin, bmin, amin = min(fmin, f), min(bmin, b), min(amin, a)
    if not cert["samples"]:
        return diffs
    if cert.get("lam_fitted", True):
        lam2 = math.exp(np.mean([r[-1] for fams in fams_all for r in fams]) / M)
        if not abs(lam2 - lam) <= tol * max(1.0, lam):
            diffs.append(f"fitted_lam: recorded {lam!r}, recomputed {lam2!r}")
    checks = {"min_margin": min(fmin, bmin), "angle_min": amin,
              "forward_ok": bool(fmin >= 0), "backward_ok": bool(bmin >= 0),
              "angle_ok": bool(amin > 1.0 / L)}
    for key, val in checks.items():
        rec = cert[key]
        if isinstance(val, bool):
            if rec != val:
                diffs.append(f"{key}: recorded {rec!r}, recomputed {val!r}")
        elif not abs(rec - val) <= tol:
            diffs.append(f"{key}: recorded {rec!r}, recomputed {val!r}")
    return diffs


# ---------------------------------------------------------------- Pesin diagnostics

def lcheck_h(lam: float, eps_bar: float) -> float:
    """sup_n n lam^{eps_bar n}; the maximum sits at one of the two integers
    around 1 / (eps_bar |log lam|)."""
    t = 1.0 / (eps_bar * abs(math.log(lam)))
    cands = {max(1, math.floor(t)), max(1, math.ceil(t))}
    return max(n * lam ** (eps_bar * n) for n in cands)


def lcheck_v(lam: float, eps_bar: float) -> float:
    return 1.0 / (1.0 - lam ** (1.0 - eps_bar))


def omega_const(lam, eps_bar, norm_inv, norm_fwd):
    q = lam ** (1.0 - eps_bar)
    return q / (1.0 - q) * norm_inv * norm_fwd


@dataclass(frozen=True)
class PesinDiagnostics:
    jac_bounds_ok: bool
    deriv_bounds_ok: bool
    vert_align_rate: float
    hor_align_rate: float
    grow_irreg_rate: float
    omega: float
    chi_h: float
    chi_v: float
    lcheck_h: float
    lcheck_v: float
    L_bar: float = 1.0
    lam: float = float("nan")


def _alignment_angles(mats, e):
    """Angle to e of the direction whose image norm is twice that of e."""
    from scipy.optimize import brentq

    e = _unit(e)
    perp = np.array([-e[1], e[0]])
    A = np.eye(2)
    out = []
    for D in mats:
        A = D @ A
        a, c = A @ e, A @ perp
        nu2 = a @ a
        q = lambda t: (math.cos(t) * a + math.sin(t) * c) @ (math.cos(t) * a + math.sin(t) * c) - 4 * nu2
        ts = []
        for sgn in (1.0, -1.0):
            grid = sgn * np.linspace(0, np.pi / 2, 257)
            vals = np.array([q(t) for t in grid])
            k = np.flatnonzero(vals[1:] > 0)
            if len(k):
                j = k[0] + 1
                ts.append(abs(brentq(q, grid[j - 1], grid[j], xtol=1e-300, rtol=1e-14)))
        out.append(min(ts) if ts else np.nan)
    return np.array(out)


def _decay_rate(angles):
    m = np.arange(1, len(angles) + 1)
    ok = np.isfinite(angles) & (angles > 0)
    if ok.sum() < 2:
        return float("nan")
    slope = np.polyfit(m[ok], np.log(angles[ok]), 1)[0]
    return float(-slope)


def pesin_diagnostics(orbit: OrbitSegment, E_v, E_h, eps: float = 0.25,
                      lam: Optional[float] = None, c3_norm: Optional[float] = None) -> PesinDiagnostics:
    """Pesin-type diagnostics along a finite orbit.

    The relaxed exponent is eps_bar = min(2 eps, 0.99); L_bar is the minimal
    forward irregularity factor along E_v at eps_bar.  Constants whose
    existence only is asserted (C) are taken as 1.
    """
    M = orbit.M
    if M < 8:
        raise InsufficientLength("diagnostics need M >= 8", M=M)
    eps_bar = min(2.0 * eps, 0.99)
    fit = fit_regularity(orbit, E_v, eps_bar, lam)
    lam = fit.lam
    L_bar = fit.L
    jac = orbit.jacobians
    inv = np.linalg.inv(jac)
    norm_f = float(np.max(np.linalg.norm(jac, 2, axis=(1, 2))))
    norm_i = float(np.max(np.linalg.norm(inv, 2, axis=(1, 2))))
    om = omega_const(lam, eps_bar, norm_i, norm_f)
    c3 = norm_f if c3_norm is None else c3_norm
    lh, lv = lcheck_h(lam, eps_bar), lcheck_v(lam, eps_bar)
    with np.errstate(over="ignore"):
        chi_h = float(np.exp(lh * c3 / lam ** eps_bar))
        chi_v = float(np.exp((lh + lv) * c3 / lam ** eps_bar))
    m = np.arange(1, M + 1)
    ll = math.log(lam)
    lLb = math.log(L_bar)
    tol = 1e-12
    # Jacobian bounds, forward at p_0 and backward at p_M
    lj = log_jac(jac)
    ljb = log_jac(inv[::-1])
    jac_ok = bool(np.all(lj >= -lLb + (1 + eps_bar) * m * ll - tol)
                  and np.all(lj <= lLb + (1 - eps_bar) * m * ll + tol)
                  and np.all(ljb >= -lLb - (1 - eps_bar) * m * ll - tol)
                  and np.all(ljb <= lLb - (1 + eps_bar) * m * ll + tol))
    # derivative bounds along E_v and E_h
    k2 = 2 * math.log1p(om)
    deriv_ok = True
    end_dirs = []
    for E in (E_v, E_h):
        ln, v_end = propagate(jac, _unit(E))
        end_dirs.append(v_end)
        deriv_ok &= bool(np.all(ln >= (1 + eps_bar) * m * ll - lLb - k2 - tol)
                         and np.all(ln <= k2 - eps_bar * m * ll + tol))
    for v_end in end_dirs:
        lnb, _ = propagate(inv[::-1], v_end)
        deriv_ok &= bool(np.all(lnb >= eps_bar * m * ll - lLb - k2 - tol)
                         and np.all(lnb <= k2 - (1 + eps_bar) * m * ll + tol))
    vert = _decay_rate(_alignment_angles(jac, E_v))
    hor = _decay_rate(_alignment_angles(inv[::-1], end_dirs[1]))
    # growth of the minimal irregularity factor along the orbit
    logs_L = []
    v = _unit(E_v)
    for k in range(M - 1):
        tail = jac[k:]
        ln, _ = propagate(tail, v)
        lJ = log_jac(tail)
        logs_L.append(max(required_log_L(r, lam, eps) for _, r in ratio_logs("forward", ln, lJ)))
        v = jac[k] @ v
        v = v / np.linalg.norm(v)
    grow = float(np.polyfit(np.arange(M - 1), logs_L, 1)[0] / abs(ll))
    return PesinDiagnostics(jac_ok, bool(deriv_ok), vert, hor, grow, om, chi_h, chi_v, lh, lv, L_bar, lam)
