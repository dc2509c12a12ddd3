import csv
import subprocess
import sys

import numpy as np
import pytest
import yaml

from mdpfold.cli import main
from mdpfold.modelfile import dump_model
from mdpfold.model import StateGrid, build_model
from mdpfold.structure import is_quasi_convex_even

from conftest import drift_rows, identity_model


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fig1_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("fig1") / "fig1.yaml"
    assert main(["example", "fig1", "--out", str(path)]) == 0
    return path


def test_example_fig1_prints_thresholds(capsys):
    assert main(["example", "fig1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split(" = ")[0] for line in out[:4]] == ["k1", "k2", "k3", "k4"]
    assert abs(float(out[3].split(" = ")[1]) - 1.05) <= 0.02


def test_solve_fig1_values_quasi_convex(fig1_file, tmp_path):
    out, pol = tmp_path / "v.csv", tmp_path / "p.csv"
    assert main(["solve", str(fig1_file), "--out", str(out), "--policy", str(pol)]) == 0
    rows = read_csv(out)
    grid = StateGrid.continuous(10.0, 0.01)
    stages = sorted({int(r["t"]) for r in rows})
    assert stages == [1, 2, 3, 4, 5]
    for t in stages:
        v = np.array([float(r["V"]) for r in rows if int(r["t"]) == t])
        assert v.size == grid.size
        assert is_quasi_convex_even(v, grid)
    assert {r["u"] for r in read_csv(pol)} == {"0", "1"}


def test_solve_csv_is_deterministic(fig1_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["solve", str(fig1_file), "--out", str(a)])
    main(["solve", str(fig1_file), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_missing_grid_exits_1(tmp_path, capsys):
    p = tmp_path / "m.yaml"
    doc = yaml.safe_load(dump_model(identity_model()))
    del doc["grid"]
    p.write_text(yaml.safe_dump(doc))
    assert main(["solve", str(p)]) == 1
    assert "grid" in capsys.readouterr().err


def test_zero_cost_model_all_zero(tmp_path):
    p, out = tmp_path / "m.yaml", tmp_path / "v.csv"
    dump_model(identity_model(half_range=2, n_actions=2), p)
    assert main(["solve", str(p), "--out", str(out)]) == 0
    assert all(float(r["V"]) == 0 for r in read_csv(out))


def test_validation_error_exits_2(tmp_path, capsys):
    p = tmp_path / "m.yaml"
    doc = yaml.safe_load(dump_model(identity_model()))
    doc["kernel"]["table"][0][0] = [0.5, 0.0, 0.0]
    p.write_text(yaml.safe_dump(doc))
    assert main(["solve", str(p)]) == 2
    assert "RowNotStochastic" in capsys.readouterr().err


def test_verify_fig1_holds(fig1_file, tmp_path):
    rep = tmp_path / "r.txt"
    assert main(["verify", str(fig1_file), "--report", str(rep)]) == 0
    lines = rep.read_text().splitlines()
    assert lines[:5] == [f"C{i} holds" for i in range(1, 6)]


def test_verify_m5_exits_3(tmp_path, capsys):
    p = tmp_path / "m5.yaml"
    main(["example", "counterexample-m5", "--out", str(p)])
    capsys.readouterr()
    assert main(["verify", str(p)]) == 3
    out = capsys.readouterr().out
    assert "C3 violated (C3, -, 0, 0, 1," in out


def test_verify_identity_exits_0(tmp_path):
    p = tmp_path / "m.yaml"
    dump_model(identity_model(), p)
    assert main(["verify", str(p), "--tolerance", "1e-12"]) == 0


def test_fold_writes_folded_model(tmp_path):
    src, dst = tmp_path / "m.yaml", tmp_path / "f.yaml"
    dump_model(identity_model(half_range=2), src)
    assert main(["fold", str(src), "--out", str(dst)]) == 0
    doc = yaml.safe_load(dst.read_text())
    assert doc["grid"]["folded"] is True
    assert len(doc["kernel"]["table"][0]) == 3


def test_fold_not_even_exits_4(tmp_path, capsys):
    p = tmp_path / "d.yaml"
    m = build_model(StateGrid.integer(2), [0], drift_rows(2)[None],
                    (np.zeros((5, 1)), np.zeros(5)), 3)
    dump_model(m, p)
    assert main(["fold", str(p), "--out", str(tmp_path / "x.yaml")]) == 4
    assert "A2" in capsys.readouterr().err


def test_monotone_solve_compare(tmp_path, capsys):
    p = tmp_path / "r.yaml"
    doc = {
        "grid": {"kind": "integer", "half_range": 8},
        "actions": [0, 1],
        "kernel": {"generator": {"preset": "remote-estimation", "params": {
            "grid": {"kind": "integer", "half_range": 8},
            "noise": {"table": [0.25, 0.5, 0.25]}, "lambda": [0, 1], "q": [0, 0.8],
            "horizon": 4}}},
        "costs": "generator",
    }
    p.write_text(yaml.safe_dump(doc))
    assert main(["monotone-solve", str(p), "--compare", "--out", str(tmp_path / "v.csv")]) == 0
    err = capsys.readouterr().err
    dev = float(err.split("max |V_monotone - V_full| = ")[1].split(";")[0])
    assert dev <= 1e-12
    assert "strategies identical: True" in err
    assert "warning" not in err


def test_monotone_solve_warns_on_violations(tmp_path, capsys):
    p = tmp_path / "m2.yaml"
    main(["example", "counterexample-m2", "--out", str(p)])
    capsys.readouterr()
    assert main(["monotone-solve", str(p), "--compare"]) == 0
    err = capsys.readouterr().err
    assert "warning" in err and "C5 violated" in err
    assert "strategies identical: False" in err


def test_monotone_solve_continuous_grid_exits_2(fig1_file):
    assert main(["monotone-solve", str(fig1_file)]) == 2


def test_vi_writes_tables(tmp_path, capsys):
    p, out, pol = tmp_path / "m5.yaml", tmp_path / "v.csv", tmp_path / "g.csv"
    dump_model(identity_model(half_range=2, n_actions=2), p)
    assert main(["vi", str(p), "--beta", "0.9", "--out", str(out), "--policy", str(pol)]) == 0
    assert len(read_csv(out)) == 5 and len(read_csv(pol)) == 5
    assert "converged True" in capsys.readouterr().err


def test_vi_bad_beta_exits_2(tmp_path):
    p = tmp_path / "m.yaml"
    dump_model(identity_model(), p)
    assert main(["vi", str(p), "--beta", "1.0"]) == 2


def test_example_m5_output(capsys):
    assert main(["example", "counterexample-m5", "--p", "0.4", "--k", "0.25", "--K", "3"]) == 0
    out = capsys.readouterr().out
    assert "V1(0) = 0.8" in out and "V1(1) = 0.7" in out and "V1(-1) = 0.7" in out
    assert "NOT quasi-convex" in out


def test_example_m5_out_of_regime_exits_2():
    assert main(["example", "counterexample-m5", "--p", "0.3"]) == 2


def test_example_option_for_other_preset_exits_1():
    assert main(["example", "counterexample-m5", "--sigma", "2"]) == 1


def test_unknown_preset_exits_1():
    assert main(["example", "nope"]) == 1


def test_unknown_command_exits_1():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_example_chains_verify_and_solve(capsys):
    assert main(["example", "counterexample-m5", "--verify", "--solve"]) == 3
    out = capsys.readouterr().out
    assert "C5 violated" in out and "t,x,V" in out


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "mdpfold.cli", "example", "counterexample-m5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "NOT quasi-convex" in res.stdout


def test_thread_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("MDPFOLD_THREADS", "1")
    assert main(["example", "counterexample-m5"]) == 0
