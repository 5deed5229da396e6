import csv
import io
import json

import numpy as np
import pytest

from vtamp.bench import SpectrumSpec, gen_instance
from vtamp.cli import main
from vtamp.phase import single_run_distribution
from vtamp.registers import write_instance


@pytest.fixture
def instance_file(tmp_path):
    inst, b = gen_instance(4, SpectrumSpec("log-uniform", 8), 1)
    path = tmp_path / "inst.json"
    write_instance(path, inst, b)
    return str(path)


def test_phase_demo(capsys):
    assert main(["phase-demo", "--lambda", "0.3", "--bits", "5"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 32
    p = np.array([float(r["p"]) for r in rows])
    assert np.allclose(p, single_run_distribution(0.3, 5), atol=1e-11)
    assert sum(float(r["q"]) for r in rows) == pytest.approx(1.0)


def test_verify_model(instance_file, capsys):
    assert main(["verify-model", "--instance", instance_file]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["validation"]["passed"]
    assert out["profile"]["t_av"] <= out["profile"]["t_max"]


@pytest.mark.parametrize("method", ["vtaa", "hhl"])
def test_solve_json_and_csv(instance_file, capsys, method):
    assert main(["solve", "--instance", instance_file, "--method", method]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["method"] == method and d["fidelity"] >= 0.8
    assert main(["solve", "--instance", instance_file, "--method", method, "--out", "csv"]) == 0
    rows = dict(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert float(rows["fidelity"]) == pytest.approx(d["fidelity"])


def test_bench_scaling_deterministic(tmp_path, capsys):
    args = ["bench-scaling", "--kappas", "4,8,16", "--n", "2", "--trials", "2", "--seed", "1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "method,kappa,n,seed,cost,fidelity,accept_rate,t_av,p_succ"
    assert main(args + ["--format", "json", "--fit"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)
    assert "vtaa slope" in captured.err


def test_errors_return_nonzero(tmp_path, capsys):
    assert main(["phase-demo", "--lambda", "1.5"]) == 2
    assert main(["solve", "--instance", str(tmp_path / "missing.json")]) == 2
    assert "error" in capsys.readouterr().err
