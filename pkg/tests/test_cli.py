import numpy as np
import pytest

from hybridfinger.cli import main
from hybridfinger.kinematics.chain import fk


def _out(capsys):
    return capsys.readouterr().out.strip().splitlines()


def test_validate_params(capsys, params, tmp_path):
    assert main(["validate-params"]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("l2_mm: 1\n")
    assert main(["validate-params", "--params", str(bad)]) == 2


def test_fk_and_degrees(capsys, params):
    assert main(["fk", "0.1", "2", "5"]) == 0
    X = [float(v) for v in _out(capsys)[0].split()]
    assert X == pytest.approx(np.array(fk((0.1, 2, 5), params)), abs=1e-6)
    assert main(["fk", "--deg", str(np.degrees(0.1)), "2", "5"]) == 0
    assert [float(v) for v in _out(capsys)[0].split()] == pytest.approx(X, abs=1e-6)


def test_ik(capsys, params):
    X = fk((0.1, 2.0, 5.0), params)
    assert main(["ik", *map(str, X), "--joints"]) == 0
    lines = _out(capsys)
    assert [float(v) for v in lines[0].split()] == pytest.approx([0.1, 2.0, 5.0], abs=1e-6)
    assert len(lines[1].split()) == 5


def test_runtime_error_exit_code(capsys):
    assert main(["ik", "0", "0", "500"]) == 3
    assert main(["fk", "0", "-3.4", "8"]) == 3


def test_jacobian_csv(tmp_path):
    out = tmp_path / "j.csv"
    assert main(["jacobian", "0", "2", "5", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "row,dM1,dM2,dM3" and len(rows) == 4


def test_plan_joint(capsys, tmp_path):
    out = tmp_path / "plan.csv"
    assert main(["plan-joint", "--to-x", "0", "-48", "45", "--out", str(out)]) == 0
    assert "iterations" in _out(capsys)[0]
    assert out.read_text().splitlines()[0] == "t_s,m1_rad,m2_mm,m3_mm"


def test_run_path_and_analyze(capsys, tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x_mm,y_mm,z_mm\n0,-48,45\n0,-44,45\n0,-44,49\n0,-48,45\n")
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("tolerance_mm: 0.1\nv_desired_mm_s: 8.0\ndt_ctrl_s: 0.01\n")
    trace = tmp_path / "t.csv"
    assert main(["run-path", str(path), "--config", str(cfg), "--out", str(trace)]) == 0
    assert trace.read_text().splitlines()[0] == "t_s,x_mm,y_mm,z_mm"
    capsys.readouterr()
    summary = tmp_path / "s.csv"
    assert main(["analyze", str(trace), "--path", str(path), "--v", "8", "--plane", "flexion",
                 "--out", str(summary)]) == 0
    text = capsys.readouterr().out
    assert "corridor pass" in text and "start_end" in text
    assert summary.read_text().splitlines()[0].startswith("path,plane,metric")


def test_bad_config_key(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x_mm,y_mm,z_mm\n0,-48,45\n0,-44,45\n")
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("speed: 3\n")
    assert main(["run-path", str(path), "--config", str(cfg)]) == 2


def test_benchmark_cli_deterministic(tmp_path, capsys):
    args = ["benchmark", "--shape", "step", "--plane", "abduction", "--trials", "2",
            "--preset", "abduction-degraded", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "summary.csv" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_benchmark_zero_trials():
    assert main(["benchmark", "--trials", "0"]) == 2
