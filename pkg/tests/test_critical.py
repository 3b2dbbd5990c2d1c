import numpy as np
import pytest
import shapely
from scipy.interpolate import CubicSpline

from henon_renorm.critical import (chart_distances, critical_recurrence_check, critical_value_at,
                                   factor_residual, first_entry_map, local_manifolds,
                                   normal_form_charts, quad_mapping, quadratic_factorize,
                                   section_interval)
from henon_renorm.errors import NegativeCurvature, NotSingleCritical
from henon_renorm.henon import LinearMap, canonical
from henon_renorm.renorm import CenteredChart, LevelChart

# 20 maps vanishing to second order at 0 with f''(0) > 0
FACTOR_SUITE = [
    (lambda x: x ** 2, (-1, 1)),
    (lambda x: 3 * x ** 2 + x ** 3, (-1, 1)),
    (lambda x: x ** 2 + x ** 4, (-1, 1)),
    (lambda x: 1 - np.cos(x), (-1.5, 1.5)),
    (lambda x: np.cosh(x) - 1, (-2, 2)),
    (lambda x: x ** 2 * np.exp(x), (-1, 1)),
    (lambda x: np.log1p(x ** 2), (-2, 2)),
    (lambda x: x ** 2 / (1 + x ** 2), (-0.9, 0.9)),
    (lambda x: 0.01 * x ** 2 + 0.002 * x ** 3, (-1, 1)),
    (lambda x: 50 * x ** 2 - x ** 3, (-1, 2)),
    (lambda x: np.sin(x) ** 2, (-1.2, 1.2)),
    (lambda x: x ** 2 * (2 + np.sin(3 * x)), (-0.5, 0.5)),
    (lambda x: np.exp(x) - 1 - x, (-2, 2)),
    (lambda x: x ** 2 + 0.3 * x ** 3 + 0.1 * x ** 4, (-1, 1)),
    (lambda x: np.sqrt(1 + x ** 2) - 1, (-3, 3)),
    (lambda x: x * np.arctan(x), (-2, 2)),
    (lambda x: (1 + x) ** 2 * x ** 2, (-0.5, 0.5)),
    (lambda x: 2 * x ** 2 - x ** 3 + 0.25 * x ** 4, (-0.5, 1)),
    (lambda x: x ** 2 * np.cos(x), (-1, 1)),
    (lambda x: 1 - 1 / np.sqrt(1 + x ** 2), (-1, 1)),
]


# ---------------------------------------------------------------- critical value

def test_critical_point_maps_to_value(pipe05):
    c = pipe05.crit
    assert np.max(np.abs(pipe05.F(np.asarray(c.v_minus1)) - np.asarray(c.v0))) < 1e-10


def test_cauchy_gaps_decrease(pipe05):
    c = pipe05.crit
    g = c.cauchy_gaps
    assert g[0] > g[1] > g[2]
    pts = np.array(c.per_depth)
    assert np.allclose(g, np.hypot(*np.diff(pts, axis=0).T), rtol=0, atol=0)


def test_per_depth_values_recomputed(pipe05):
    # the value at each depth is found again from that depth's domain alone
    seq = pipe05.seq
    for n in (2, 3):
        dom = seq.ret(n).domain
        start, _ = critical_value_at(dom)
        v = pipe05.F.iterate_points(start, dom.period)
        assert np.max(np.abs(v - np.array(pipe05.crit.per_depth[n - 1]))) < 1e-12
        assert dom.contains(v)


def test_tangency_and_invariance(pipe05):
    c = pipe05.crit
    assert c.tangency_residual < 1e-3
    assert c.invariance_angle < 1e-6


def test_b0_value_is_1d_critical_value(pipe0):
    assert abs(pipe0.crit.v0.x - pipe0.a) < 1e-9
    assert abs(pipe0.crit.v_minus1.x) < 1e-9


# ---------------------------------------------------------------- valuable charts

def test_normal_form_residual(pipe05):
    assert pipe05.charts.normal_form_residual < 1e-4
    assert pipe05.charts.kappa_F > 0


def test_value_bounds(pipe05):
    ch = pipe05.charts
    hw = ch.phi_minus1.target.h_interval[1]
    x = ch.f0.xs[np.abs(ch.f0.xs) <= hw]
    f = ch.f0(x)
    tol = 1e-12
    assert np.all(ch.kappa_F / 2 * x ** 2 <= f + tol)
    assert np.all(f <= ch.K_hat / 2 * x ** 2 + tol)


def test_normal_form_of_straight_map():
    lam, y0 = 0.1, 0.2
    F = canonical(1.0, lam)
    v0 = F(np.array([0.0, y0]))
    phi0 = CenteredChart(LevelChart(F, 1, v0), v0)
    xs = np.linspace(-0.8, 0.8, 401)
    vc = normal_form_charts(F, phi0, (0.0, y0), np.stack([xs, np.full_like(xs, y0)], -1), lam)
    assert vc.kappa_F == pytest.approx(2.0, abs=1e-8)
    assert np.max(np.abs(vc.f0.ys - vc.f0.xs ** 2)) < 1e-12
    assert vc.normal_form_residual < 1e-12


# ---------------------------------------------------------------- first entry

def test_first_entry_against_raw_orbit(pipe05):
    seq, ch = pipe05.seq, pipe05.charts
    fe = first_entry_map(seq, ch, 1)
    assert np.isfinite(fe.e_sup)
    assert np.all(np.diff(fe.h_samples.ys) > 0) or np.all(np.diff(fe.h_samples.ys) < 0)
    psi, (lo, hi) = section_interval(seq, 1, ch.exact0.center)
    x = np.linspace(lo, hi, 66)[1:-1]
    p = psi.invert(np.stack([x, np.zeros_like(x)], -1))
    for _ in range(seq.ret(1).period - 1):
        p = np.array([pipe05.F(q) for q in p])
    assert np.max(np.abs(ch.exact_minus1.apply(p)[:, 0] - fe.h_samples(x))) < 1e-8


def test_first_entry_vertical_part_shrinks(pipe05):
    e = [first_entry_map(pipe05.seq, pipe05.charts, n).e_sup for n in (1, 2, 3)]
    assert e[0] > e[1] > e[2]


def test_first_entry_b0_is_flat(pipe0):
    for n in (1, 2, 3):
        assert first_entry_map(pipe0.seq, pipe0.charts, n).e_sup == 0.0


# ---------------------------------------------------------------- factorization

def test_factorize_square():
    psi, k = quadratic_factorize(lambda x: x ** 2, (-1, 1))
    assert k == pytest.approx(2.0, abs=1e-12)
    assert np.max(np.abs(psi.ys - psi.xs / np.sqrt(2))) < 1e-15


def test_factorize_cubic_closed_form():
    f = lambda x: 3 * x ** 2 + x ** 3
    psi, k = quadratic_factorize(f, (-1, 1))
    assert k == pytest.approx(6.0, abs=1e-9)
    x = psi.xs
    assert np.max(np.abs(psi.ys - x * np.sqrt(0.5 + x / 6))) < 1e-9
    assert factor_residual(f, psi, k) < 1e-12


def test_factorize_negative():
    with pytest.raises(NegativeCurvature):
        quadratic_factorize(lambda x: -x ** 2, (-1, 1))


def test_factorize_second_critical_point():
    with pytest.raises(NotSingleCritical):
        quadratic_factorize(lambda x: x ** 2 - x ** 4, (-1, 1))


@pytest.mark.parametrize("k", range(len(FACTOR_SUITE)))
def test_factorize_suite(k):
    f, I = FACTOR_SUITE[k]
    psi, kappa = quadratic_factorize(f, I)
    assert factor_residual(f, psi, kappa) < 1e-10
    assert np.all(np.diff(psi.ys) > 0)


def test_factorize_accepts_samples():
    xs = np.linspace(-0.5, 0.5, 1001)
    psi, k = quadratic_factorize((xs, xs ** 2 + xs ** 3))
    assert k == pytest.approx(2.0, rel=1e-5)


# ---------------------------------------------------------------- quad mapping

def test_quad_mapping_zero_graph_is_f0(pipe05):
    ch = pipe05.charts
    T = ch.phi_minus1.target
    I = (0.8 * T.h_interval[0], 0.8 * T.h_interval[1])
    psi, a, kappa, xc, res = quad_mapping(lambda x: 0 * x, ch, I)
    assert abs(a) < 1e-14 and res < 1e-12
    psi0, k0 = quadratic_factorize(ch.f0, I)
    assert kappa == pytest.approx(k0, rel=1e-6)
    x = np.linspace(0.9 * I[0], 0.9 * I[1], 101)
    assert np.max(np.abs(psi(x - xc) - psi0(x))) < 1e-7


def test_quad_mapping_constant_graph_shifts(pipe05):
    ch = pipe05.charts
    T = ch.phi_minus1.target
    I = (0.8 * T.h_interval[0], 0.8 * T.h_interval[1])
    c = 0.3 * T.v_interval[1]
    psi0, a0, *_ = quad_mapping(lambda x: 0 * x, ch, I)
    psi1, a1, *_ = quad_mapping(lambda x: 0 * x + c, ch, I)
    assert a1 - a0 == pytest.approx(-ch.lam * c, abs=1e-12)
    assert np.max(np.abs(psi1.ys - psi0.ys)) < 1e-9


def test_quad_mapping_measured_graph(pipe05):
    seq, ch = pipe05.seq, pipe05.charts
    n = 3
    psi, (lo, hi) = section_interval(seq, n, ch.exact0.center)
    x = np.linspace(lo, hi, 801)
    p = pipe05.F.iterate_points(psi.invert(np.stack([x, np.zeros_like(x)], -1)), seq.ret(n).period - 1)
    uv = ch.exact_minus1.apply(p)
    u, v = uv[np.all(np.isfinite(uv), axis=1)].T   # ends leave the chart
    order = np.argsort(u)
    g = CubicSpline(u[order], v[order])
    T = ch.phi_minus1.target
    I = (max(u.min(), T.h_interval[0]) * 0.9, min(u.max(), T.h_interval[1]) * 0.9)
    assert I[0] < 0 < I[1]
    *_, res = quad_mapping(g, ch, I)
    assert res < 1e-6


# ---------------------------------------------------------------- local manifolds

def test_local_manifolds_linear():
    ws, wc = local_manifolds(LinearMap(np.diag([1.5, 0.3])), (0.0, 0.0), 0.5)
    assert np.max(np.abs(ws.samples[:, 0])) == 0
    assert np.max(np.abs(wc.samples[:, 1])) == 0


@pytest.fixture(scope="module")
def saddle_manifolds():
    a, b = 1.4, 0.05
    F = canonical(a, b)
    x = (-(1 + b) + np.sqrt((1 + b) ** 2 + 4 * a)) / 2
    P = np.array([x, x])
    return F, P, local_manifolds(F, P, 0.2)


def _tangent_at(curve, P):
    k = int(np.argmin(np.linalg.norm(curve.samples - P, axis=1)))
    t = curve.samples[k + 1] - curve.samples[k - 1]
    return t / np.linalg.norm(t)


def test_stable_manifold_tangent_to_eigenvector(saddle_manifolds):
    F, P, (ws, wc) = saddle_manifolds
    w, V = np.linalg.eig(F.jacobian(P))
    for curve, idx in ((ws, np.argmin(np.abs(w))), (wc, np.argmax(np.abs(w)))):
        e = np.real(V[:, idx])
        e /= np.linalg.norm(e)
        t = _tangent_at(curve, P)
        assert abs(t[0] * e[1] - t[1] * e[0]) < 1e-6


def test_local_manifolds_invariant(saddle_manifolds):
    F, P, (ws, wc) = saddle_manifolds
    for curve in (ws, wc):
        spl = CubicSpline(curve.cumulative_length, curve.samples)
        line = shapely.LineString(spl(np.linspace(0, curve.length, 40001)))
        img = F(curve.samples)
        near = np.linalg.norm(img - P, axis=1) < 0.09
        d = shapely.distance(line, shapely.points(img[near]))
        assert np.max(d) < 1e-8


# ---------------------------------------------------------------- recurrence and charts

def test_recurrence_shrinks_around_value(pipe05):
    diam, contains = critical_recurrence_check(pipe05.seq, pipe05.crit)
    assert all(diam[k + 1] < diam[k] for k in range(len(diam) - 1))
    assert all(contains)
    dom = pipe05.seq.ret(1).domain
    pts = np.vstack(dom.sample(n_probe=40))
    img = pipe05.F.iterate_points(pts[dom.contains(pts)], dom.period)
    assert diam[0] == pytest.approx(float(np.hypot(*np.ptp(img, axis=0))), rel=1e-12)


def test_chart_distances_decrease(pipe05):
    d = chart_distances(pipe05.seq, pipe05.crit.v0)
    assert d[0] > d[1] > d[2]
    assert d[2] < d[0] / 10
