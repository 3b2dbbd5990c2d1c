"""Command-line driver: cascade, analyze, verify, sweep, schema.

Exit codes: 0 ok, 1 usage or parse error, 2 cascade failure, 3 structural
finding, 4 verification mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_CASCADE, EXIT_FINDING, EXIT_VERIFY = 0, 1, 2, 3, 4
SCHEMA_VERSION = "1"

_NUM = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "henon-renorm analysis report",
    "type": "object",
    "required": ["schema_version", "kind", "config", "returns", "certificates", "findings", "status"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "analysis"},
        "version": {"type": "string"},
        "config": {"type": "object", "required": ["a", "b", "nmax", "eps", "group", "seed"]},
        "cascade": {"type": ["object", "null"]},
        "returns": {"type": "array", "items": {
            "type": "object", "required": ["n", "period", "margin"],
            "properties": {"n": {"type": "integer"}, "period": {"type": "integer"}, "margin": _NUM}}},
        "certificates": {"type": "array", "items": {
            "type": "object", "required": ["n", "certificate"],
            "properties": {"n": {"type": "integer"}, "certificate": {
                "type": "object",
                "required": ["forward_ok", "backward_ok", "angle_ok", "min_margin", "fitted_L",
                             "fitted_lam", "angle_min", "eps", "L", "M", "samples"],
                "properties": {"samples": {"type": "array", "items": {
                    "type": "object",
                    "required": ["jacobians", "forward_margin", "backward_margin", "angle"]}}}}}}},
        "critical": {"type": ["object", "null"]},
        "charts": {"type": ["object", "null"]},
        "chart_distances": {"type": "array", "items": _NUM},
        "recurrence": {"type": ["object", "null"]},
        "structure": {"type": "array"},
        "distortion": {"type": ["object", "null"]},
        "findings": {"type": "array", "items": {
            "type": "object", "required": ["code", "stage"],
            "properties": {"code": {"type": "string"}, "stage": {"type": "string"}}}},
        "status": {"enum": ["ok", "findings"]},
        "wall_time": {"type": "number"},
    },
}


# ---------------------------------------------------------------- plumbing

@dataclass
class RunConfig:
    a: Optional[str] = None
    b: float = 0.05
    nmax: int = 4
    eps: float = 0.25
    group: int = 1
    samples: int = 128
    seed: int = 0
    out: str = "."
    a_range: Optional[list] = None
    b_range: Optional[list] = None
    timing: bool = False

    def validate(self):
        if not 1 <= self.nmax <= 8:
            raise ValueError("nmax must lie in 1..8")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.group < 1:
            raise ValueError("group must be >= 1")
        for r in (self.a_range, self.b_range):
            if r is not None and len(_grid(r)) == 0:
                raise ValueError("empty range")


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("range must be LO:HI or LO:HI:STEP")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return vals


def _grid(r):
    lo, hi = r[0], r[1]
    if not hi >= lo:
        return []
    if len(r) == 2 or r[2] <= 0:
        return [lo] if hi == lo else [lo, hi]
    n = int(math.floor((hi - lo) / r[2] + 1e-9)) + 1
    return [lo + k * r[2] for k in range(n)]


def plain(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    # float repr is the shortest round-trip form
    return json.dumps(plain(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _finding(stage, exc_or_code, message="", **extra):
    if isinstance(exc_or_code, Exception):
        code = getattr(exc_or_code, "code", type(exc_or_code).__name__)
        message = message or str(exc_or_code)
    else:
        code = exc_or_code
    return {"code": code, "stage": stage, "message": message, **extra}


def _threads():
    try:
        return max(1, int(os.environ.get("HENON_RENORM_THREADS", "")))
    except ValueError:
        return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------- cascade

def cmd_cascade(cfg: RunConfig) -> int:
    from .cascade import find_cascade

    casc = find_cascade(cfg.b, cfg.nmax)
    rep = casc.to_dict()
    if cfg.a_range is not None:
        lo, hi = cfg.a_range[0], cfg.a_range[1]
        rep["levels"] = [lv for lv in rep["levels"] if lo <= lv["s_n"] <= hi]
    rep["kind"] = "cascade"
    rep["gap_delta"] = casc.gap_delta()
    out = Path(cfg.out)
    _write(out / "cascade.json", dumps(rep))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "a_n", "s_n", "delta_n"])
    for lv in rep["levels"]:
        w.writerow([lv["n"], repr(float(lv["a_n"])), repr(float(lv["s_n"])),
                    "" if lv["delta_n"] is None else repr(float(lv["delta_n"]))])
    _write(out / "cascade.csv", buf.getvalue())
    return EXIT_OK if casc.complete else EXIT_CASCADE


# ---------------------------------------------------------------- analyze

def _resolve_a(cfg: RunConfig):
    text = str(cfg.a)
    if text.startswith("s"):
        from .cascade import find_cascade

        k = int(text[1:])
        casc = find_cascade(cfg.b, max(k, 1))
        if len(casc.levels) < k:
            raise ValueError(f"superstable parameter s{k} unavailable")
        return float(casc.s[k - 1]), casc
    return float(text), None


def analyze(cfg: RunConfig) -> dict:
    """Run the full pipeline; every stage failure becomes a finding."""
    from .critical import (build_valuable_charts, chart_distances, critical_recurrence_check,
                           locate_critical_value)
    from .henon import canonical
    from .onedim import Tower, check_1dlike_structure, verify_bounds
    from .regularity import certify_return
    from .renorm import nested_returns

    t0 = time.perf_counter()
    a, casc = _resolve_a(cfg)
    report = {"schema_version": SCHEMA_VERSION, "kind": "analysis", "version": __version__,
              "config": {"a": a, "a_spec": str(cfg.a), "b": cfg.b, "nmax": cfg.nmax, "eps": cfg.eps,
                         "group": cfg.group, "samples": cfg.samples, "seed": cfg.seed},
              "cascade": casc.to_dict() if casc is not None else None,
              "returns": [], "certificates": [], "critical": None, "charts": None,
              "chart_distances": [], "recurrence": None, "structure": [], "distortion": None,
              "findings": []}
    find = report["findings"]
    F = canonical(a, cfg.b)
    try:
        seq = nested_returns(F, cfg.nmax, grouping=cfg.group)
    except Exception as exc:
        find.append(_finding("renorm", exc))
        return _finish(report, cfg, t0)
    if seq.error is not None:
        find.append(_finding("renorm", seq.error, depth=seq.depth + 1))
    for n in range(1, seq.depth + 1):
        dom = seq.ret(n).domain
        report["returns"].append({"n": n, "period": dom.period, "margin": dom.margin,
                                  "I_X": list(dom.I_X), "I_Y": list(dom.I_Y),
                                  "disjointness_ok": dom.disjointness_ok})
        try:
            cert = certify_return(seq.ret(n), eps=cfg.eps, sample_n=cfg.samples, seed=cfg.seed)
        except Exception as exc:
            find.append(_finding("regularity", exc, depth=n))
            continue
        report["certificates"].append({"n": n, "certificate": cert.to_dict()})
        if not cert.passed:
            find.append(_finding("regularity", "certificate_failed", f"depth {n} certificate failed",
                                 depth=n, min_margin=cert.min_margin))
    if seq.depth < 2:
        find.append(_finding("critical", "insufficient_depth", "critical value needs depth >= 2"))
        return _finish(report, cfg, t0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            crit = locate_critical_value(seq)
        for w in caught:
            find.append(_finding("critical", getattr(w.category, "__name__", "warning"), str(w.message)))
        report["critical"] = crit.to_dict()
        report["chart_distances"] = chart_distances(seq, np.asarray(crit.v0))
        diam, inside = critical_recurrence_check(seq, crit)
        report["recurrence"] = {"diameters": diam, "contains_v0": inside}
        charts = build_valuable_charts(seq, crit)
        report["charts"] = {k: v for k, v in charts.to_dict().items() if k not in ("phi0", "phi_minus1")}
    except Exception as exc:
        find.append(_finding("critical", exc))
        return _finish(report, cfg, t0)
    try:
        tower = Tower(seq, crit.v0)
        for k in range(len(tower.periods) - 1):
            if tower.ratios[k] < 3:
                report["structure"].append({"level": k, "n": tower.levels[k], "s": 1, "applicable": False})
                continue
            res = check_1dlike_structure(tower, k, 1)
            report["structure"].append({"level": k, "n": tower.levels[k], "s": 1, "applicable": True,
                                        **res.to_dict()})
            if not res.ok:
                find.append(_finding("onedim", "structure_violation", f"level {k}", failures=res.failures))
        if len(tower.periods) >= 2:
            rep = verify_bounds(tower, charts, seq, seed=cfg.seed)
            report["distortion"] = rep.to_dict()
            for f in rep.findings:
                find.append(_finding("onedim", f["code"], f["message"], depth=f["n"]))
    except Exception as exc:
        find.append(_finding("onedim", exc))
    return _finish(report, cfg, t0)


def _finish(report, cfg, t0):
    report["status"] = "findings" if report["findings"] else "ok"
    if cfg.timing:
        report["wall_time"] = time.perf_counter() - t0
    return report


def cmd_analyze(cfg: RunConfig) -> int:
    report = analyze(cfg)
    jsonschema.validate(plain(report), REPORT_SCHEMA)
    _write(Path(cfg.out) / "report.json", dumps(report))
    return EXIT_OK if report["status"] == "ok" else EXIT_FINDING


# ---------------------------------------------------------------- verify

def cmd_verify(path: str, tol: float = 1e-9, stream=sys.stdout) -> int:
    from .regularity import verify_certificate

    try:
        report = json.loads(Path(path).read_text())
        jsonschema.validate(report, REPORT_SCHEMA)
    except (OSError, ValueError, jsonschema.ValidationError) as exc:
        print(f"parse error: {exc}", file=stream)
        return EXIT_USAGE
    diffs = []
    for entry in report["certificates"]:
        for d in verify_certificate(entry["certificate"], tol):
            diffs.append(f"depth {entry['n']}: {d}")
    for d in diffs:
        print(d, file=stream)
    if diffs:
        return EXIT_VERIFY
    print(f"verified {len(report['certificates'])} certificates", file=stream)
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def _sweep_point(args):
    a, b, nmax = args
    from .henon import canonical
    from .renorm import find_periodic_domain

    F = canonical(a, b)
    parent, margins, err = None, [], None
    for n in range(1, nmax + 1):
        try:
            parent = find_periodic_domain(F, 2 ** n, parent)
        except Exception as exc:
            err = getattr(exc, "code", type(exc).__name__)
            break
        margins.append(parent.margin)
    return {"a": a, "b": b, "depth": len(margins), "margins": margins, "error": err}


def cmd_sweep(cfg: RunConfig) -> int:
    grid = [(a, b, cfg.nmax) for b in _grid(cfg.b_range) for a in _grid(cfg.a_range)]
    with ProcessPoolExecutor(max_workers=min(_threads(), max(1, len(grid)))) as pool:
        rows = list(pool.map(_sweep_point, grid))
    out = Path(cfg.out)
    _write(out / "sweep.json", dumps({"kind": "sweep", "config": asdict(cfg), "points": rows}))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "depth", "error"])
    for r in rows:
        w.writerow([repr(r["a"]), repr(r["b"]), r["depth"], r["error"] or ""])
    _write(out / "sweep.csv", buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="henon-renorm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(q, a_required=False):
        q.add_argument("--b", type=float, default=0.05)
        q.add_argument("--nmax", type=int, default=4)
        q.add_argument("--out", default=".")
        q.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("cascade", help="period-doubling parameters and delta estimates")
    common(c)
    c.add_argument("--a-range", type=_parse_range)
    an = sub.add_parser("analyze", help="full pipeline at one parameter")
    common(an)
    an.add_argument("--a", required=True, help="parameter value, or sN for the superstable s_N(b)")
    an.add_argument("--eps", type=float, default=0.25)
    an.add_argument("--group", type=int, default=1)
    an.add_argument("--samples", type=int, default=128)
    an.add_argument("--timing", action="store_true", help="record wall time (breaks byte identity)")
    v = sub.add_parser("verify", help="re-check certificate margins of a report")
    v.add_argument("report")
    v.add_argument("--tol", type=float, default=1e-9)
    s = sub.add_parser("sweep", help="periodic-domain depth over a parameter grid")
    common(s)
    s.add_argument("--a-range", type=_parse_range, required=True)
    s.add_argument("--b-range", type=_parse_range, required=True)
    sub.add_parser("schema", help="print the report JSON schema")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "schema":
        sys.stdout.write(dumps(REPORT_SCHEMA))
        return EXIT_OK
    if args.cmd == "verify":
        return cmd_verify(args.report, args.tol)
    cfg = RunConfig(b=args.b, nmax=args.nmax, out=args.out, seed=args.seed)
    for key in ("a", "eps", "group", "samples", "a_range", "b_range", "timing"):
        if hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"henon-renorm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.cmd == "cascade":
        return cmd_cascade(cfg)
    if args.cmd == "analyze":
        try:
            return cmd_analyze(cfg)
        except ValueError as exc:
            print(f"henon-renorm: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return cmd_sweep(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
