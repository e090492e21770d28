import csv
import math
import json
import shutil
import subprocess

import pytest
import yaml

from morawetz_lab.cli import main

FAST_GRID = {"m_radial": 24, "angular_order": 8, "R_out": 4.0}


def _write(tmp_path, cfg, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return path


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_bad_config_exits_2(tmp_path, capsys):
    path = _write(tmp_path, {"grid": {"m_radial": 24, "spacing": 0.1}})
    assert main(["check-identity", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "grid.spacing" in capsys.readouterr().err
    assert main(["selftest", "--jobs", "0", "--out", str(tmp_path / "o")]) == 2


def test_smallness_report(tmp_path):
    out = tmp_path / "small"
    cfg = {"potential": {"name": "inverse_square_V", "params": [0.2]}, "grid": FAST_GRID}
    status = main(["check-smallness", "--config", str(_write(tmp_path, cfg)), "--out", str(out)])
    rep = _report(out)
    assert status == 0 and rep["status"] == "pass"
    # 0.2/r integrated in r over [1, 4]
    assert rep["result"]["smallness"]["C3"] == pytest.approx(0.2 * math.log(4), rel=1e-4)
    assert (out / "smallness.csv").exists()
    assert {"command", "config_hash", "config", "seed", "tolerance_scale", "version", "checks",
            "result"} <= set(rep)
    assert yaml.safe_load((out / "config.yaml").read_text()) == rep["config"]


def test_identity_csv(tmp_path):
    out = tmp_path / "ident"
    cfg = {"potential": {"name": "example1", "params": []}}
    assert main(["check-identity", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
    with (out / "terms.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "term"
    assert {row[0] for row in rows[1:]} >= {f"T{i}" for i in range(1, 15)}
    assert _report(out)["checks"]


def test_solve_writes_profile(tmp_path):
    out = tmp_path / "solve"
    cfg = {"grid": FAST_GRID, "instance": {"k": 1.5, "epsilon": 0.1}}
    assert main(["solve", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 0
    with (out / "radial_profile.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "sphere_l2"] and float(rows[1][0]) == 1.0
    assert _report(out)["result"]["solve"]["method"] == "fourier_blocks"


def test_runtime_error_exits_3_with_module(tmp_path):
    out = tmp_path / "err"
    cfg = {"obstacle": {"shape": "radial_graph", "center": [0, 0, 0], "rho": "1 + cos(theta)**2/5"},
           "grid": FAST_GRID}
    assert main(["solve", "--config", str(_write(tmp_path, cfg)), "--out", str(out)]) == 3
    rep = _report(out)
    assert rep["status"] == "error" and rep["module"] == "solver"


def test_overrides_change_the_hash(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["check-smallness", "--out", str(a)])
    main(["check-smallness", "--out", str(b), "--seed", "7", "--tolerance-scale", "2"])
    ra, rb = _report(a), _report(b)
    assert rb["seed"] == 7 and rb["tolerance_scale"] == 2.0
    assert ra["config_hash"] != rb["config_hash"]


@pytest.mark.skipif(shutil.which("morawetz-lab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["morawetz-lab", "check-smallness", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert "check-smallness: pass" in proc.stdout
