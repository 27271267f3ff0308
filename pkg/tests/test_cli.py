import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from umbilic import __version__
from umbilic.cli import CSV_COLUMNS, run
from umbilic.locus import refine_zero
from umbilic.surfaces import Ellipsoid

DATA = Path(__file__).resolve().parents[1] / "data"


def run_json(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = run([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_scan_log_torus_example(tmp_path):
    code, doc = run_json(tmp_path, "scan", "--surface", "log_torus", "--eps", "0.5", "--grid", "24")
    assert code == 0
    assert doc["result"]["min_abs_q"] > 0
    assert doc["schema"] == 1 and doc["version"] == __version__
    assert doc["config"]["resolved_surface"] == {"kind": "log_torus", "eps": 0.5}
    assert doc["config"]["grid"] == 24


def test_perturb_q0_on_ellipsoid_file(tmp_path):
    code, doc = run_json(tmp_path, "perturb", "--poly", str(DATA / "ellipsoid.toml"), "--op", "q0")
    assert code == 0
    assert doc["result"]["is_zero"] is True and doc["result"]["terms"] == []


def test_perturb_genericity(tmp_path):
    code, doc = run_json(tmp_path, "perturb", "--poly", str(DATA / "ellipsoid.toml"), "--op", "genericity")
    assert code == 0 and doc["result"]["admissible"] is False


def test_unknown_surface_is_a_usage_error(capsys):
    assert run(["scan", "--surface", "nosuch"]) == 2
    assert "nosuch" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["scan", "--surface", "log_torus", "--eps", "0.5", "--grid", "3"],
    ["scan", "--surface", "log_torus", "--eps", "-1"],
    ["scan"],
    ["perturb", "--poly", "/nonexistent/poly.toml"],
    ["nosuch-command"],
])
def test_usage_and_io_errors_exit_2(argv):
    assert run(argv) == 2


def test_malformed_toml_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("kind = \n")
    assert run(["scan", "--surface-file", str(bad)]) == 2


def test_refine_on_log_torus_reports_finding_and_exits_0(tmp_path):
    code, doc = run_json(tmp_path, "refine", "--surface", "log_torus", "--eps", "0.5", "--grid", "8")
    assert code == 0
    assert doc["result"]["found"] is False
    assert doc["result"]["finding"] == "no zero found"


def test_refine_and_local_index_on_ellipsoid(tmp_path):
    ell = ["--surface", "ellipsoid", "--A", "0.3", "--B", "0.2", "--eps", "0.02"]
    code, doc = run_json(tmp_path, "refine", *ell)
    assert code == 0 and doc["result"]["found"] is True
    code, doc = run_json(tmp_path, "index", *ell, "--local", name="ix.json")
    assert code == 0 and doc["result"]["index"] == [-1, 2]


def test_index_with_det_field_matches_q(tmp_path):
    base = ["index", "--surface", "log_torus", "--eps", "0.5", "--center", "0.3", "1.0", "2.0",
            "--radius", "0.2"]
    code_q, q = run_json(tmp_path, *base, name="q.json")
    code_d, d = run_json(tmp_path, *base, "--field", "det", name="d.json")
    assert code_q == code_d == 0
    assert q["result"]["winding"] == d["result"]["winding"] == 0


def test_curve_through_locus_exits_1(tmp_path):
    s = Ellipsoid(0.3, 0.2, 0.02)
    zero = refine_zero(s, [0.68, 2.0, 2.0 - np.pi / 2], scale=0.012)
    t = 2 * np.pi * np.arange(12) / 12
    verts = [[0.6 + 0.2 * np.cos(a), 2.0, 2.0 - np.pi / 2] for a in t]
    verts[0] = [float(x) for x in zero]
    path = tmp_path / "curve.json"
    path.write_text(json.dumps(verts))
    code = run(["index", "--surface", "ellipsoid", "--A", "0.3", "--B", "0.2", "--eps", "0.02",
                "--curve-file", str(path)])
    assert code == 1


def test_trace_csv_has_fixed_columns(tmp_path):
    out = tmp_path / "curve.csv"
    code = run(["trace", "--surface", "ellipsoid", "--A", "0.3", "--B", "0.2", "--eps", "0.02",
                "--step", "0.2", "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("# ")]
    assert header and json.loads(header[0][2:])["config"]["step"] == 0.2
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0].split(",") == CSV_COLUMNS
    assert len(body) > 5


def test_check_nonumbilic_verdicts(tmp_path):
    code, doc = run_json(tmp_path, "check-nonumbilic", "--surface", "log_torus", "--eps", "0.5",
                         "--grid", "16")
    assert code == 0 and doc["result"]["verdict"] == "no umbilical points (numerical)"
    code, doc = run_json(tmp_path, "check-nonumbilic", "--surface", "ellipsoid", "--A", "0.3",
                         "--B", "0.2", "--eps", "0.02", "--grid", "16", name="e.json")
    assert code == 0 and doc["result"]["verdict"] == "inconclusive"


def test_identical_config_gives_identical_bytes(tmp_path):
    out = tmp_path / "scan.json"
    argv = ["scan", "--surface", "ellipsoid", "--A", "0.3", "--B", "0.2", "--eps", "0.05",
            "--grid", "8", "--samples", "--out", str(out)]
    assert run(argv) == 0
    first = out.read_bytes()
    assert run(argv) == 0
    assert out.read_bytes() == first


def test_console_entry_point_runs_as_module():
    proc = subprocess.run([sys.executable, "-m", "umbilic", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
