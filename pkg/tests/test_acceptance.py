"""Acceptance suite: one recorded PASS/FAIL line per criterion, at its stated tolerance."""
import json
import time

import numpy as np

from henon_renorm.cascade import find_cascade
from henon_renorm.cli import main
from henon_renorm.critical import chart_distances, factor_residual, quadratic_factorize
from henon_renorm.geometry import Curve
from henon_renorm.onedim import (build_arc_family, check_1dlike_structure, crd, denjoy_bound,
                                 koebe_check, min_crd, nested_pairs)
from henon_renorm.regularity import certify_return, verify_certificate
from test_cascade import brute_force_superstable
from test_critical import FACTOR_SUITE
from test_onedim import random_circle_maps, random_mobius


def _no_upward_trend(v):
    last = np.asarray(v[-3:], float)
    return not np.all(np.diff(last) > 0)


def per_track_ratio(tower, k):
    """max over residues j of (padded length on track j) / |track j|; informational only."""
    fam = build_arc_family(tower, k, strict=False)
    R0 = tower.periods[0]
    base = tower.line(np.linspace(*tower.section(0), 257))
    worst = 0.0
    for j in range(R0):
        tot = sum(c.length for i, c in fam.padded.items() if i >= 2 * R0 and fam.residues[i] == j)
        worst = max(worst, tot / Curve.from_samples(tower.F.iterate_points(base, j)).length)
    return worst


def test_criterion_1_degenerate_calibration(criterion):
    t0 = time.perf_counter()
    casc = find_cascade(0.0, 7)
    dt = time.perf_counter() - t0
    oracle = brute_force_superstable(7)
    a_inf, d6 = casc.accumulation(), casc.deltas()[6]
    d6_oracle = (oracle[5] - oracle[4]) / (oracle[6] - oracle[5])
    ok = (abs(a_inf - 1.4012) < 1e-3 and 4.4 <= d6 <= 4.9 and abs(d6 / d6_oracle - 1) < 1e-6
          and np.max(np.abs(casc.s - oracle)) < 1e-11 and dt < 10)
    assert criterion(1, ok, f"a_inf={a_inf:.7f} delta6={d6:.5f} oracle_delta6={d6_oracle:.5f} t={dt:.2f}s")


def test_criterion_2_dissipative_cascade(criterion, cascade0):
    t0 = time.perf_counter()
    casc = find_cascade(0.05, 6)
    dt = time.perf_counter() - t0
    rel = casc.gap_delta() / cascade0.gap_delta() - 1
    ok = casc.complete and len(casc.levels) == 6 and abs(rel) < 0.10 and dt < 60
    assert criterion(2, ok, f"delta={casc.gap_delta():.5f} vs b=0 {cascade0.gap_delta():.5f} "
                            f"rel={rel:+.4f} t={dt:.2f}s")


def test_criterion_3_regularity(criterion, pipe05, tmp_path):
    margins, ok = [], True
    for n in (1, 2, 3):
        cert = certify_return(pipe05.seq.ret(n), eps=0.25)
        ok &= cert.forward_ok and cert.backward_ok and cert.angle_ok and cert.min_margin > 0
        ok &= verify_certificate(cert.to_dict(), 1e-9) == []
        margins.append(cert.min_margin)
    code = main(["analyze", "--a", "s5", "--b", "0.05", "--nmax", "3", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    cli_ok = code == 0 and len(rep["certificates"]) == 3 and all(
        c["certificate"]["forward_ok"] and c["certificate"]["backward_ok"] and c["certificate"]["angle_ok"]
        and c["certificate"]["min_margin"] > 0 for c in rep["certificates"])
    vcode = main(["verify", str(tmp_path / "report.json")])
    ok = bool(ok and cli_ok and vcode == 0)
    assert criterion(3, ok, "min_margin=" + ",".join(f"{m:.4f}" for m in margins)
                     + f" analyze_exit={code} verify_exit={vcode}")


def test_criterion_4_chart_convergence(criterion, pipe05):
    d = chart_distances(pipe05.seq, pipe05.crit.v0)
    ok = d[0] > d[1] > d[2] and d[2] < d[0] / 10
    assert criterion(4, ok, "d=" + ",".join(f"{x:.2e}" for x in d[:3]))


def test_criterion_5_critical_locus(criterion, pipe05):
    c, ch = pipe05.crit, pipe05.charts
    fv = float(np.max(np.abs(pipe05.F(np.asarray(c.v_minus1)) - np.asarray(c.v0))))
    g = c.cauchy_gaps
    ok = fv < 1e-10 and g[0] > g[1] > g[2] and c.tangency_residual < 1e-3 and ch.normal_form_residual < 1e-4
    assert criterion(5, ok, f"|F(v-1)-v0|={fv:.1e} gaps=" + ",".join(f"{x:.1e}" for x in g[:3])
                     + f" tangency={c.tangency_residual:.1e} normal_form={ch.normal_form_residual:.1e}")


def test_criterion_6_1dlike_structure(criterion, pipe05_g2):
    r = check_1dlike_structure(pipe05_g2.tower, 0, 1)
    ok = r.disjoint and r.ordered and r.mapped and min(r.margins) > 0
    assert criterion(6, ok, f"(i)={r.disjoint} (ii)={r.ordered} (iii)={r.mapped} margins="
                     + ",".join(f"{m:+.2e}" for m in r.margins))


def test_criterion_7_distortion_suite(criterion, bounds0, bounds05, pipe05):
    parts, ok = [], True
    for tag, rep, depths in (("b=0", bounds0, slice(0, 4)), ("b=0.05", bounds05, slice(0, 3))):
        if rep.findings:
            ok = False
        for key in ("dis_return", "dis_hatH_max", "dis_hn"):
            v = np.asarray(rep.series(key)[depths], float)
            fin = bool(np.all(np.isfinite(v)))
            spread = float(v.max() / v.min()) if fin else np.inf
            flat = _no_upward_trend(v)
            ok &= fin and spread < 3 and flat
            parts.append(f"{tag}:{key} spread={spread:.3f}{'' if flat else ' RISING'}")
        for d in rep.per_depth[depths]:
            if d["total_padded_length"] >= 2 * d["section_length"]:
                ok = False
                parts.append(f"{tag}:n={d['n']} padded={d['total_padded_length']:.3f}"
                             f">=2|I|={2 * d['section_length']:.3f}")
    track = max(per_track_ratio(pipe05.tower, k) for k in (2, 3))
    parts.append(f"info: per-track padded/|track| max={track:.3f} (b=0.05, n=3..4)")
    assert criterion(7, ok, "; ".join(parts))


def test_criterion_8_interval_toolkit(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_mob = 0.0
    for _ in range(1000):
        f = random_mobius(rng)
        P, Q = nested_pairs((0.0, 1.0), 1, rng)[0]
        worst_mob = max(worst_mob, abs(crd(f, P, Q) - 1))
    worst_pow = np.inf
    for P, Q in nested_pairs((0.05, 3.0), 1000, rng):
        alpha = rng.uniform(1.1, 6.0)
        worst_pow = min(worst_pow, crd(lambda x: x ** alpha, P, Q))
    denjoy = all(l <= r for l, r in (denjoy_bound(f, J, 6, df=df, d2f=d2f)
                                     for f, df, d2f, J in random_circle_maps(100)))
    I, J = (0.0, 1.0), (0.3, 0.6)
    suite = [random_mobius(rng) for _ in range(20)]
    suite += [lambda x, a=a: (x + 0.2) ** a for a in (1.5, 2.0, 3.0, 5.0)]
    suite += [np.exp, lambda x: np.exp(3 * x), np.arctan]
    koebe_ok = True
    for f in suite:
        dis, K = koebe_check(f, I, J, nu=min(1.0, min_crd(f, I, 200)))
        koebe_ok &= dis <= K
    dt = time.perf_counter() - t0
    ok = worst_mob < 1e-9 and worst_pow >= 1 - 1e-12 and denjoy and koebe_ok and dt < 30
    assert criterion(8, ok, f"mobius_max|CrD-1|={worst_mob:.1e} power_minCrD={worst_pow:.6f} "
                            f"denjoy={denjoy} koebe={koebe_ok} t={dt:.2f}s")


def test_criterion_9_factorization(criterion):
    res = []
    for f, I in FACTOR_SUITE:
        psi, kappa = quadratic_factorize(f, I)
        res.append(factor_residual(f, psi, kappa))
    worst = max(res)
    assert criterion(9, len(res) == 20 and worst < 1e-10, f"20 maps worst_residual={worst:.1e}")
