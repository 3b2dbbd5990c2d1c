import time

import numpy as np
import pytest

from henon_renorm.cascade import find_cascade


def _crit_orbit(a, R):
    x = 0.0
    for _ in range(R):
        x = a - x * x
    return x


def brute_force_superstable(n_max):
    """Superstable parameters of a - x^2 by scan-then-bisect, no shared code."""
    s = [0.0]          # period 1: f_a(0) = 0 at a = 0
    gap = 1.0
    for n in range(1, n_max + 1):
        R = 2 ** n
        lo = s[-1] + 1e-3 * gap
        step = gap / 50
        g_lo = _crit_orbit(lo, R)
        hi = lo + step
        while _crit_orbit(hi, R) * g_lo > 0:
            lo, hi = hi, hi + step
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if _crit_orbit(mid, R) * g_lo > 0:
                lo = mid
            else:
                hi = mid
        s.append(0.5 * (lo + hi))
        gap = s[-1] - s[-2]
    return np.array(s[1:])


@pytest.fixture(scope="module")
def oracle():
    return brute_force_superstable(7)


def test_oracle_first_values(oracle):
    assert oracle[0] == pytest.approx(1.0, abs=1e-14)
    assert oracle[1] == pytest.approx(1.3107026413, abs=1e-9)


def test_b0_superstable_matches_oracle(cascade0, oracle):
    assert np.max(np.abs(cascade0.s - oracle)) < 1e-11


def test_b0_first_flip():
    assert find_cascade(0.0, 1).a[0] == pytest.approx(0.75, abs=1e-15)


def test_b0_accumulation(cascade0, oracle):
    d = (oracle[-2] - oracle[-3]) / (oracle[-1] - oracle[-2])
    a_inf_oracle = oracle[-1] + (oracle[-1] - oracle[-2]) / (d - 1)
    assert abs(cascade0.accumulation() - 1.4012) < 1e-3
    assert cascade0.accumulation() == pytest.approx(a_inf_oracle, abs=1e-9)


def test_b0_delta6(cascade0, oracle):
    d6 = cascade0.deltas()[6]
    assert 4.4 <= d6 <= 4.9
    assert d6 == pytest.approx((oracle[5] - oracle[4]) / (oracle[6] - oracle[5]), rel=1e-6)


def test_b0_runtime():
    t0 = time.perf_counter()
    find_cascade(0.0, 7)
    assert time.perf_counter() - t0 < 10


def test_sequence_increasing(cascade0, cascade05):
    for c in (cascade0, cascade05):
        assert np.all(np.diff(c.s) > 0)
        assert np.all(c.a < c.s)


def test_dissipative_completes(cascade05, cascade0):
    c = find_cascade(0.05, 6)
    assert c.complete and len(c.levels) == 6
    assert abs(c.gap_delta() / cascade0.gap_delta() - 1) < 0.10


def test_superstable_has_zero_trace_orbit(cascade05):
    # at s_n the period-2^n orbit has a point where the cocycle trace vanishes
    lv = cascade05.levels[2]
    a, b = lv.s_n, cascade05.b
    p = lv.orbit_point.copy()
    J = np.eye(2)
    for _ in range(lv.period):
        J = np.array([[-2 * p[0], -b], [1.0, 0.0]]) @ J
        p = np.array([a - p[0] ** 2 - b * p[1], p[0]])
    assert np.allclose(p, lv.orbit_point, atol=1e-9)
    assert abs(np.trace(J)) < 1e-8


@pytest.mark.parametrize("b, n", [(-0.1, 3), (0.5, 3), (0.05, 0), (0.05, 9)])
def test_bad_arguments(b, n):
    with pytest.raises(ValueError):
        find_cascade(b, n)


def test_serialization(cascade05):
    d = cascade05.to_dict()
    assert d["b"] == 0.05 and len(d["levels"]) == 7
    assert d["levels"][0]["delta_n"] is None
