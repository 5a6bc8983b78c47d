import json

import numpy as np
import pytest

from hybrid_benders.cli import main
from hybrid_benders.model import MilpInstance, load_instance, save_instance

from conftest import T1


@pytest.fixture
def t1_file(tmp_path):
    path = tmp_path / "t1.json"
    path.write_text(save_instance(T1))
    return path


def test_generate_writes_instances(tmp_path, capsys):
    assert main(["generate", "--count", "3", "--seed", "5", "--out", str(tmp_path)]) == 0
    files = sorted(tmp_path.glob("inst_*.json"))
    assert [f.name for f in files] == ["inst_5.json", "inst_6.json", "inst_7.json"]
    assert load_instance(files[0].read_text()).seed == 5


def test_generate_filters(tmp_path):
    assert main(["generate", "--count", "2", "--seed", "0", "--out", str(tmp_path),
                 "--max-n", "3", "--require-feasibility-cut"]) == 0
    for f in tmp_path.glob("*.json"):
        assert load_instance(f.read_text()).n <= 3


def test_oracle_prints_optimum(t1_file, capsys):
    assert main(["oracle", "--instance", str(t1_file)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "Optimal" and doc["optimum"] == 12 and doc["x"] == [0]


def test_solve_writes_report(t1_file, tmp_path):
    report = tmp_path / "r.json"
    assert main(["solve", "--instance", str(t1_file), "--conversion", "exp",
                 "--multicut", "5,3", "--backend", "exact", "--epsilon", "0.25",
                 "--seed", "1", "--report", str(report)]) == 0
    doc = json.loads(report.read_text())
    assert doc["status"] == "Optimal" and doc["objective"] == pytest.approx(12)


def test_solve_manual_penalties(t1_file, capsys):
    assert main(["solve", "--instance", str(t1_file), "--penalties", "manual",
                 "--manual-values", "3,1,1,9"]) == 0
    assert json.loads(capsys.readouterr().out)["x_best"] is not None


def test_bench_twice_is_byte_identical(tmp_path):
    main(["generate", "--count", "4", "--seed", "0", "--max-n", "4", "--out",
          str(tmp_path / "inst")])
    for run in ("a", "b"):
        assert main(["bench", "--instances", str(tmp_path / "inst"), "--variants",
                     "HBD_S_C,HBD_E_C_MC", "--out", str(tmp_path / run)]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert a.splitlines()[0] == b"instance_seed,variant,status,objective,opt,gap,iterations,qubit_max,wall_time_ms"


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["solve"],
    ["solve", "--instance", "x.json", "--conversion", "binary"],
    ["solve", "--instance", "x.json", "--multicut", "5"],
    ["oracle", "--instance", "/nonexistent/file.json"],
])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_bad_document_and_config_are_usage_errors(tmp_path, t1_file):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1}')
    assert main(["oracle", "--instance", str(bad)]) == 1
    assert main(["solve", "--instance", str(t1_file), "--multicut", "2,3"]) == 1
    assert main(["bench", "--instances", str(tmp_path), "--variants", "HBD_Z",
                 "--out", str(tmp_path / "o")]) == 1
    assert main(["bench", "--instances", str(tmp_path / "missing"), "--variants", "SA",
                 "--out", str(tmp_path / "o")]) == 1


def test_solver_errors_exit_2(tmp_path):
    # phi has no finite upper bound and the subproblem at x=0 is unbounded
    path = tmp_path / "unbounded.json"
    path.write_text(save_instance(MilpInstance(n=1, p=1, m1=1, m2=0, c=[1], h=[1], A=[[1]],
                                               G=[[-1]], b=[0], B=np.zeros((0, 1)),
                                               bprime=[])))
    assert main(["solve", "--instance", str(path)]) == 2
    assert main(["oracle", "--instance", str(path)]) == 2
