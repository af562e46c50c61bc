import json
from pathlib import Path

import pytest

from sdelab.cli import main


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


def test_simulate_smoke(tmp_path):
    code, out = run(["simulate", "--model", "cube-root", "--d", "2", "--level", "6",
                     "--T", "1", "--paths", "3", "--seed", "7"], tmp_path)
    assert code == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["config.echo.json", "path_0.csv", "path_1.csv", "path_2.csv"]
    header = (out / "path_0.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2,stopped"


def test_config_echo_reproduces_run(tmp_path):
    code, out = run(["simulate", "--model", "ou", "--theta", "1", "--vol", "1",
                     "--level", "5", "--T", "1", "--paths", "1", "--seed", "9"], tmp_path)
    assert code == 0
    echo = json.loads((out / "config.echo.json").read_text())
    assert echo["seed"] == 9
    assert echo["model"] == {"name": "ou", "params": {"theta": 1.0, "vol": 1.0}}
    assert echo["level"] == 5 and echo["T"] == 1.0 and echo["paths"] == 1


def test_unknown_model_exit_2(tmp_path, capsys):
    code, _ = run(["simulate", "--model", "wat", "--level", "4"], tmp_path)
    assert code == 2
    err = capsys.readouterr().err
    assert "cube-root" in err  # error message lists built-ins


def test_level_guard_exit_4(tmp_path):
    code, _ = run(["simulate", "--model", "cube-root", "--level", "30"], tmp_path)
    assert code == 4


def test_k_ratio_half_exit_2(tmp_path):
    code, _ = run(["check", "k-ratio", "--gamma-r", "linear", "--K", "0.5"], tmp_path)
    assert code == 2


def test_check_writes_report(tmp_path):
    code, out = run(["check", "coercivity", "--model", "blowup",
                     "--samples", "3000", "--seed", "1"], tmp_path)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "violated"


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SDELAB_SEED", "123")
    code, out = run(["simulate", "--model", "cube-root", "--level", "4"], tmp_path, "env")
    assert code == 0
    assert json.loads((out / "config.echo.json").read_text())["seed"] == 123
    # explicit flag wins over the environment
    code, out2 = run(["simulate", "--model", "cube-root", "--level", "4",
                      "--seed", "5"], tmp_path, "flag")
    assert json.loads((out2 / "config.echo.json").read_text())["seed"] == 5


def test_model_file(tmp_path):
    cfg = tmp_path / "model.json"
    cfg.write_text(json.dumps({"model": "rotation", "params": {"r": 1.0}}))
    code, out = run(["simulate", "--model-file", str(cfg), "--level", "4",
                     "--x0", "1,0"], tmp_path)
    assert code == 0
    echo = json.loads((out / "config.echo.json").read_text())
    assert echo["model"]["name"] == "rotation"


def test_scalar_fn_specs(tmp_path):
    code, out = run(["moments", "--model", "ou", "--theta", "1", "--vol", "1",
                     "--p", "4", "--T", "1", "--level", "5", "--paths", "100",
                     "--x0", "0", "--f", "poly:1,0.5", "--bound", "i",
                     "--seed", "3"], tmp_path)
    assert code == 0
    report = json.loads((out / "moment_report.json").read_text())
    assert report["bound_i"] is not None and report["bound_ii"] is None
    # int (1 + s/2) over [0,1] = 1.25
    assert report["bound_i"]["integrals"]["int_f"] == pytest.approx(1.25, rel=1e-8)


def test_table_fn_spec(tmp_path):
    table = tmp_path / "f.csv"
    table.write_text("t,value\n0,1\n1,3\n")
    code, out = run(["moments", "--model", "ou", "--theta", "1", "--vol", "1",
                     "--p", "4", "--T", "1", "--level", "4", "--paths", "50",
                     "--x0", "0", "--f", f"table:{table}", "--bound", "i",
                     "--seed", "3"], tmp_path, "tbl")
    assert code == 0
    report = json.loads((out / "moment_report.json").read_text())
    assert report["bound_i"]["integrals"]["int_f"] == pytest.approx(2.0, rel=1e-8)


def test_eval_test_fn_cli(tmp_path):
    code, out = run(["eval-test-fn", "--kind", "phi_delta", "--control", "linear",
                     "--delta", "1", "--x", "1"], tmp_path)
    assert code == 0
    val = json.loads((out / "test_function.json").read_text())["value"]
    assert val == pytest.approx(0.6931471805599453, rel=1e-8)


def test_workers_byte_identical_outputs(tmp_path):
    args = ["converge", "--model", "cube-root", "--d", "1", "--levels", "4,5",
            "--ref-level", "7", "--paths", "128", "--T", "1", "--seed", "11"]
    code1, out1 = run(args + ["--workers", "1"], tmp_path, "w1")
    code2, out2 = run(args + ["--workers", "4"], tmp_path, "w4")
    assert code1 == code2 == 0
    for p1 in sorted(out1.iterdir()):
        p2 = out2 / p1.name
        assert p1.read_bytes() == p2.read_bytes()


def test_converge_csv_schema(tmp_path):
    code, out = run(["converge", "--model", "ou", "--theta", "1", "--vol", "1",
                     "--levels", "4,5", "--ref-level", "7", "--paths", "50",
                     "--seed", "2"], tmp_path)
    assert code == 0
    lines = (out / "converge.csv").read_text().splitlines()
    assert lines[0] == "level,value,ci_halfwidth"
    assert [row.split(",")[0] for row in lines[1:]] == ["4", "5"]


def test_bad_const_literal_exit_2(tmp_path):
    code, _ = run(["moments", "--model", "ou", "--p", "4", "--level", "4",
                   "--paths", "10", "--f", "const:zz"], tmp_path)
    assert code == 2
