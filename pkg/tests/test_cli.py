import csv
import json
import shutil
import subprocess

import jsonschema
import pytest

from henon_renorm.cli import REPORT_SCHEMA, main


@pytest.fixture(scope="module")
def analyzed(tmp_path_factory):
    out = tmp_path_factory.mktemp("an")
    code = main(["analyze", "--a", "s5", "--b", "0.05", "--nmax", "3", "--out", str(out)])
    return code, out / "report.json"


def test_cascade_csv(tmp_path):
    assert main(["cascade", "--b", "0", "--nmax", "7", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "cascade.csv").open()))
    assert [int(r["n"]) for r in rows] == list(range(1, 8))
    assert 4.4 <= float(rows[5]["delta_n"]) <= 4.9
    assert rows[0]["delta_n"] == ""


def test_cascade_deterministic(tmp_path):
    for d in ("x", "y"):
        assert main(["cascade", "--b", "0.05", "--nmax", "4", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "x" / "cascade.json").read_bytes() == (tmp_path / "y" / "cascade.json").read_bytes()


@pytest.mark.parametrize("argv", [
    ["cascade", "--a-range", "2:1"],
    ["cascade", "--a-range", "1"],
    ["cascade", "--nmax", "9"],
    ["analyze", "--b", "0.05"],
    ["analyze", "--a", "1.3", "--eps", "2"],
])
def test_usage_errors(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        code = main(argv + ["--out", str(tmp_path)])
        raise SystemExit(code)
    assert exc.value.code == 1


def test_analyze_passes_and_verifies(analyzed):
    code, path = analyzed
    assert code == 0
    rep = json.loads(path.read_text())
    certs = rep["certificates"]
    assert [c["n"] for c in certs] == [1, 2, 3]
    for c in certs:
        cert = c["certificate"]
        assert cert["forward_ok"] and cert["backward_ok"] and cert["angle_ok"]
        assert cert["min_margin"] > 0
    assert main(["verify", str(path)]) == 0


def test_report_schema_valid(analyzed):
    jsonschema.validate(json.loads(analyzed[1].read_text()), REPORT_SCHEMA)


def test_analyze_deterministic(analyzed, tmp_path):
    main(["analyze", "--a", "s5", "--b", "0.05", "--nmax", "3", "--out", str(tmp_path)])
    assert (tmp_path / "report.json").read_bytes() == analyzed[1].read_bytes()


def test_verify_detects_tamper(analyzed, tmp_path):
    rep = json.loads(analyzed[1].read_text())
    rep["certificates"][1]["certificate"]["samples"][0]["forward_margin"] += 1e-6
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(rep))
    assert main(["verify", str(bad)]) == 4


def test_verify_truncated(analyzed, tmp_path):
    text = analyzed[1].read_text()
    cut = tmp_path / "cut.json"
    cut.write_text(text[: len(text) // 2])
    assert main(["verify", str(cut)]) == 1
    assert main(["verify", str(tmp_path / "missing.json")]) == 1


def test_below_first_flip_is_a_finding(tmp_path):
    assert main(["analyze", "--a", "0.5", "--b", "0.05", "--nmax", "3", "--out", str(tmp_path)]) == 3
    rep = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["findings"][0]["code"] == "no_periodic_domain"
    assert rep["status"] == "findings"


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads(json.dumps(REPORT_SCHEMA))


def test_sweep(tmp_path):
    code = main(["sweep", "--a-range", "0.5:1.3:0.4", "--b-range", "0.05:0.05", "--nmax", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    pts = json.loads((tmp_path / "sweep.json").read_text())["points"]
    depth = {round(p["a"], 6): p["depth"] for p in pts}
    assert depth[0.5] == 0 and depth[1.3] >= 1


@pytest.mark.skipif(shutil.which("henon-renorm") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["henon-renorm", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
