import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fermichart import cli
from fermichart.verification import CheckResult


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_horizon_example(capsys):
    code, out, _ = invoke(capsys, "horizon", "--model", "power_law", "--alpha", "2", "--t0", "1")
    assert code == 0
    (row,) = table(out)
    assert float(row["chi_horiz"]) == pytest.approx(1.0, rel=1e-9) and row["status"] == "ok"


def test_horizon_infinite(capsys):
    _, out, _ = invoke(capsys, "horizon", "--model", "power_law", "--alpha", "0.5", "--t0", "1")
    assert table(out)[0]["chi_horiz"] == "infinite"


def test_figure1_slopes(capsys):
    code, out, _ = invoke(capsys, "figure1", "--tau", "0.1", "10", "5")
    assert code == 0
    rows = table(out)
    assert len(rows) == 15
    for r in rows:
        assert float(r["slope"]) == pytest.approx(float(r["expected_slope"]), rel=1e-9)
    slopes = sorted({round(float(r["expected_slope"]), 6) for r in rows})
    assert slopes == [1.198140, 2.0, round(math.pi, 6)]


def test_verify_milne(capsys):
    code, out, err = invoke(capsys, "verify", "--model", "milne")
    assert code == 0 and "all checks passed" in err
    rows = {r["check"]: r for r in table(out)}
    assert rows["milne_oracle"]["passed"] == "true"
    assert "g_tautau = -1" in rows["milne_oracle"]["detail"]
    assert all(r["test_id"].startswith("tests/test_acceptance.py::") for r in rows.values())


def test_verify_failure_exits_one(capsys, monkeypatch):
    monkeypatch.setattr(cli, "run_checks", lambda ctx, cfg: [CheckResult("forced", False, -1.0)])
    code, _, err = invoke(capsys, "verify", "--model", "milne")
    assert code == 1 and "FAILED" in err


def test_chart_flags_beyond_horizon(capsys):
    code, out, _ = invoke(capsys, "chart", "--model", "power_law", "--alpha", "2", "--t", "1", "--chi", "2")
    assert code == 0
    (row,) = table(out)
    assert row["status"] == "beyond_horizon" and row["tau"] == "nan"


def test_chart_milne_both_ways(capsys):
    _, out, _ = invoke(capsys, "chart", "--model", "milne", "--t", "1", "--chi", "1")
    row = table(out)[0]
    assert float(row["tau"]) == pytest.approx(math.cosh(1), rel=1e-12)
    _, out, _ = invoke(capsys, "chart", "--model", "milne", "--direction", "from-fermi",
                       "--tau", row["tau"], "--rho", row["rho"])
    back = table(out)[0]
    assert float(back["chi"]) == pytest.approx(1.0, rel=1e-10)


def test_metric_and_velocity(capsys):
    code, out, _ = invoke(capsys, "metric", "--model", "milne", "--tau", "2", "--rho", "0.5")
    assert code == 0 and float(table(out)[0]["g_tautau"]) == pytest.approx(-1.0, abs=1e-12)
    code, out, _ = invoke(capsys, "velocity", "--model", "power_law", "--alpha", "0.5",
                          "--tau", "1", "--t0", "0.25")
    row = table(out)[0]
    assert code == 0 and float(row["v_fermi"]) > float(row["v_kin"])


def test_out_of_chart_row(capsys):
    _, out, _ = invoke(capsys, "metric", "--model", "milne", "--tau", "1", "--rho", "5")
    assert table(out)[0]["status"] == "out_of_chart"


def test_json(capsys):
    _, out, _ = invoke(capsys, "radius", "--model", "milne", "--tau", "1", "2", "2", "--format", "json")
    doc = json.loads(out)
    assert doc["command"] == "radius" and doc["model"] == {"kind": "milne"}
    assert [r["rho_max"] for r in doc["records"]] == [1.0, 2.0]


def test_csv_deterministic(capsys, tmp_path):
    args = ["radius", "--model", "sinh", "--tau", "0.5", "3", "6"]
    _, first, _ = invoke(capsys, *args)
    _, second, _ = invoke(capsys, *args, "--jobs", "3")
    assert first == second
    path = tmp_path / "r.csv"
    assert cli.main(args + ["-o", str(path)]) == 0
    assert path.read_text() == first


def test_model_file(capsys, tmp_path):
    path = tmp_path / "m.json"
    ts = [0.0] + np.geomspace(1e-4, 4.0, 200).tolist()
    path.write_text(json.dumps({"kind": "tabulated", "samples": [[t, t * t] for t in ts]}))
    code, out, _ = invoke(capsys, "radius", "--model-file", str(path), "--tau", "1")
    assert code == 0
    assert float(table(out)[0]["rho_max"]) == pytest.approx(0.59907, rel=1e-3)


@pytest.mark.parametrize("argv", [
    ["radius", "--model", "nope"],
    ["radius", "--model", "milne", "--tau", "1", "2", "0"],
    ["radius", "--model", "power_law", "--alpha", "-1", "--tau", "1"],
    ["bogus"],
    ["radius", "--model-file", "/nonexistent/model.json", "--tau", "1"],
])
def test_usage_errors(capsys, argv):
    code, _, _ = invoke(capsys, *argv)
    assert code == 2


def test_irregular_table_is_usage_error(capsys, tmp_path):
    path = tmp_path / "coarse.json"
    path.write_text(json.dumps({"kind": "tabulated", "samples": [[i / 10, (i / 10) ** 2] for i in range(41)]}))
    code, _, err = invoke(capsys, "radius", "--model-file", str(path), "--tau", "1")
    assert code == 2 and "not regular" in err and len(err) < 400


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fermichart.cli", "radius", "--model", "milne", "--tau", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert table(proc.stdout)[0]["rho_max"] == "3"
