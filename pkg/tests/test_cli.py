import csv
import subprocess
import sys

import numpy as np
import pytest

from smrm import modelfile, reproduce
from smrm.cli import main
from smrm.direct import solve_ge
from smrm.model import chain_model, preprocess
from smrm.rewards import Exponential


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def waste_file(tmp_path):
    path = tmp_path / "waste.yaml"
    modelfile.dump(reproduce.waste_model(), path)
    return path


def test_solve_ge_writes_density_and_report(waste_file, tmp_path):
    out = tmp_path / "dens.csv"
    assert main(["solve", str(waste_file), "--method", "ge", "--k", "20", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["state", "abscissa", "value"]
    assert len(rows) == 1 + 2 * 20
    ref = solve_ge(preprocess(reproduce.waste_model(), k=20)).solution
    values = np.array([float(r[2]) for r in rows[1:] if r[0] == "s0"])
    assert np.allclose(values, ref[:, 0], atol=0)
    report = read_csv(tmp_path / "dens.report.csv")
    assert report[0] == ["method", "iterations", "residual", "wall_time", "termination"]
    assert report[1][4] == "Direct"


def test_solve_cdf_flag(waste_file, tmp_path):
    out = tmp_path / "cdf.csv"
    assert main(["solve", str(waste_file), "--method", "power", "--k", "30", "--cdf", "--out", str(out)]) == 0
    values = [float(r[2]) for r in read_csv(out)[1:] if r[0] == "s1"]
    assert np.all(np.diff(values) >= 0)


def test_solve_continuous(tmp_path):
    path = tmp_path / "exp.yaml"
    modelfile.dump(chain_model([[0.5]], [0.5], Exponential(1.0)), path)
    out = tmp_path / "c.csv"
    code = main(["solve", str(path), "--method", "cont-power", "--interval", "10", "--points", "201",
                 "--quad", "romberg:2", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)[1:]
    x = np.array([float(r[1]) for r in rows])
    v = np.array([float(r[2]) for r in rows])
    assert np.max(np.abs(v - 0.5 * np.exp(-0.5 * x))) < 1e-5


def test_solve_hits_iteration_cap(waste_file, tmp_path):
    code = main(["solve", str(waste_file), "--method", "power", "--k", "30", "--max-iter", "1",
                 "--epsilon", "1e-15", "--out", str(tmp_path / "x.csv")])
    assert code == 2


@pytest.mark.parametrize("args", [
    ["solve", "missing.yaml", "--k", "5"],
    ["solve", "{model}"],
    ["solve", "{model}", "--method", "cont-power"],
    ["solve", "{model}", "--method", "magic", "--k", "5"],
    ["bench", "--param-range", "nonsense"],
])
def test_bad_input_exits_1(args, waste_file):
    args = [a.replace("{model}", str(waste_file)) for a in args]
    assert main(args) == 1


def test_malformed_model_exits_1(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("states: [a]\n")
    assert main(["solve", str(path), "--k", "5"]) == 1


def test_reproduce_toy_and_waste(tmp_path):
    assert main(["reproduce", "toy", "--out", str(tmp_path), "--traces", "500", "--seed", "1"]) == 0
    errs = {r[0]: float(r[1]) for r in read_csv(tmp_path / "toy_error_vs_ge.csv")[1:]}
    assert errs["power"] <= 1e-7
    assert errs["lu_pad_10k"] <= errs["lu_pad_5k"] <= errs["lu_pad_k-1"]
    assert (tmp_path / "toy_sampling.csv").exists()
    assert main(["reproduce", "waste", "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "waste_pmf.csv")) == 101


def test_bench_rows_and_seed_determinism(tmp_path):
    args = ["bench", "--samples", "3", "--states", "4", "--k", "64", "--methods", "power,jacobi,ge",
            "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "2"]) == 0
    ra, rb = read_csv(a), read_csv(b)
    assert len(ra) == 1 + 3 * 3
    # wall time differs between runs; everything else must match
    strip = [[r[i] for i in (0, 1, 2, 4, 5)] for r in ra]
    assert strip == [[r[i] for i in (0, 1, 2, 4, 5)] for r in rb]
    assert all(float(r[4]) < 1e-5 for r in ra[1:])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "smrm", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "solve" in res.stdout and "bench" in res.stdout
