import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henon_renorm.errors import EscapedDomain, NotADiffeomorphism, NotUnimodal, OutOfDomain
from henon_renorm.geometry import VERTICAL, DirectionP, Rect
from henon_renorm.henon import (HenonLikeMap, LinearMap, apply, canonical, center_direction,
                                iterate, jacobian, most_contracting_direction,
                                period_doubling_parameter, profile_1d, strong_stable_direction)
from henon_renorm.renorm import periodic_point


def test_apply_arithmetic():
    assert np.allclose(apply(canonical(1.0, 0.3), (0, 0)), (1, 0))
    assert np.allclose(apply(canonical(1.4, 0.3), (1, 1)), (0.1, 1), atol=1e-15)


def test_apply_outside_domain():
    with pytest.raises(OutOfDomain):
        apply(canonical(1.4, 0.3), (10.0, 0.0))


def test_iterate_composition():
    F = canonical(1.4, 0.3)
    orb = iterate(F, (0.1, 0.2), 2)
    assert np.max(np.abs(orb.points[2] - F(F(np.array([0.1, 0.2]))))) <= 1e-15
    assert np.allclose(orb.cumulative[2], orb.jacobians[1] @ orb.jacobians[0])


def test_iterate_reports_escape():
    F = canonical(3.0, 0.3)
    with pytest.raises(EscapedDomain) as exc:
        iterate(F, (2.0, 0.0), 10)
    assert exc.value.details["m"] >= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_iterate_semigroup(m1, m2, x, y):
    F = canonical(1.2, 0.1)
    p = np.array([x, y])
    a = F.iterate_points(F.iterate_points(p, m1), m2)
    b = F.iterate_points(p, m1 + m2)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1, m1 + m2)


def test_jacobian_at_origin():
    b = 0.05
    J = jacobian(canonical(1.3, b), (0, 0))
    assert np.allclose(J, [[0, -b], [1, 0]])


def test_determinant_constant(rng):
    b = 0.17
    F = canonical(1.3, b)
    pts = rng.uniform(-2, 2, (10_000, 2))
    assert np.max(np.abs(np.linalg.det(F.jacobian(pts)) - b)) < 1e-12


def test_finite_difference_jacobian(rng):
    a, b = 1.3, 0.2
    G = HenonLikeMap(profile=lambda x, y: a - x * x - b * y)
    F = canonical(a, b)
    pts = rng.uniform(-2, 2, (1000, 2))
    assert np.max(np.abs(G.jacobian(pts) - F.jacobian(pts))) < 1e-6


def test_evaluator_inverse():
    G = HenonLikeMap(profile=lambda x, y: 1.3 - x * x - 0.2 * y - 0.01 * y ** 3)
    p = np.array([0.3, -0.4])
    assert np.allclose(G.inverse(G(p)), p, atol=1e-10)


def test_profile_canonical():
    prof = profile_1d(canonical(2.0, 0.3))
    assert abs(prof.critical_point) < 1e-7  # golden section resolves ~sqrt(eps)
    assert prof.critical_value == pytest.approx(2.0, abs=1e-12)
    assert prof.maximum


def test_profile_not_unimodal():
    G = HenonLikeMap(profile=lambda x, y: 0.5 * x + 0 * y)
    with pytest.raises(NotUnimodal):
        profile_1d(G)


def test_most_contracting_diagonal():
    L = LinearMap(np.diag([2.0, 0.5]))
    for m in (1, 5, 40):
        est = most_contracting_direction(L, (0.1, 0.1), m)
        assert est.direction.distance(VERTICAL) < 1e-14


def test_most_contracting_rotated():
    th = np.pi / 2
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    L = LinearMap(rot @ np.diag([2.0, 0.5]))
    est = most_contracting_direction(L, (0.0, 0.0), 1)
    assert est.direction.distance(VERTICAL) < 1e-14


def test_most_contracting_matches_dense_svd():
    a, b = 1.4, 0.05
    F = canonical(a, b)
    p, _ = periodic_point(F, (0.9, -0.4), 2)
    m = 20
    est = most_contracting_direction(F, p, m)
    _, J = F.cocycle(p, m)
    _, _, Vt = np.linalg.svd(J)
    assert est.direction.distance(DirectionP.from_vector(Vt[1])) < 1e-8


def test_strong_stable_at_fixed_point():
    a, b = 1.4, 0.05
    F = canonical(a, b)
    x = (-(1 + b) + np.sqrt((1 + b) ** 2 + 4 * a)) / 2
    p = np.array([x, x])
    w, V = np.linalg.eig(F.jacobian(p))
    eig = DirectionP.from_vector(np.real(V[:, np.argmin(np.abs(w))]))
    est = strong_stable_direction(F, p, tol=1e-12)
    assert est.direction.distance(eig) < 1e-8


def test_strong_stable_diagonal_converges_at_once():
    est = strong_stable_direction(LinearMap(np.diag([2.0, 0.5])), (0.0, 0.0))
    assert est.residual == 0


def test_center_direction_not_for_b0():
    with pytest.raises(NotADiffeomorphism):
        center_direction(canonical(1.3, 0.0), (0.1, 0.1))


def test_strong_stable_equivariant():
    a, b = 1.4, 0.05
    F = canonical(a, b)
    p, _ = periodic_point(F, (0.9, -0.4), 2)
    tol = 1e-10
    e0 = strong_stable_direction(F, p, tol).direction
    e1 = strong_stable_direction(F, F(p), tol).direction
    pushed = DirectionP.from_vector(F.jacobian(p) @ e0.vector)
    assert pushed.distance(e1) < 2 * tol


@pytest.mark.parametrize("b, a1", [(0.0, 0.75), (1.0, 3.0)])
def test_flip_parameter_closed_form(b, a1):
    assert period_doubling_parameter(b) == pytest.approx(a1)


@pytest.mark.parametrize("b", [0.0, 0.05, 0.2, 0.3])
def test_flip_eigenvalue(b):
    a = period_doubling_parameter(b)
    xs = (1 + b) / 2
    F = canonical(a, b)
    assert np.allclose(F((xs, xs)), (xs, xs), atol=1e-15)
    w = np.linalg.eigvals(F.jacobian(np.array([xs, xs])))
    assert np.min(np.abs(w + 1)) < 1e-10


def test_orbit_csv():
    orb = iterate(canonical(1.0, 0.3), (0, 0), 2)
    lines = orb.to_csv().splitlines()
    assert lines[0] == "m,x,y" and lines[2] == "1,1.0,0.0"


def test_map_json_roundtrip():
    F = canonical(1.3, 0.05, Rect((-2, 2), (-2, 2)))
    G = HenonLikeMap.from_dict(F.to_dict())
    assert (G.a, G.b, G.domain) == (F.a, F.b, F.domain)
