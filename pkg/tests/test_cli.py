import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from stabnn.cli import build_parser, main


def test_weights_to_stdout(capsys):
    assert main(["weights", "--method", "knn", "--n", "6", "--k", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "rank,weight"
    vals = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert vals == pytest.approx([1 / 3] * 3 + [0] * 3)


@pytest.mark.parametrize("method", ["bnn", "snn", "ownn"])
def test_weights_sum_to_one(tmp_path, capsys, method):
    assert main(["weights", "--method", method, "--n", "200", "--d", "2", "--out", str(tmp_path)]) == 0
    path = capsys.readouterr().out.strip()
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    w = np.array([float(r["weight"]) for r in rows])
    assert len(w) == 200 and w.sum() == pytest.approx(1.0) and (w >= 0).all()


def test_theory_json(capsys):
    assert main(["theory", "--n-list", "500", "--max-d", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["cis_ratios"]) == 3
    snn = next(c for c in out["validation_curves"] if c["method"] == "SNN")
    assert snn["k"] == 19


def test_theory_writes_files(tmp_path, capsys):
    assert main(["theory", "--n-list", "100", "--max-d", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "theory.json").exists()
    text = (tmp_path / "validation_curves.csv").read_text()
    assert text.startswith("# seed: 42\n")


def test_validate_summary(capsys):
    assert main(["validate", "--n-list", "40", "--reps", "2", "--seed", "9"]) == 0
    out = capsys.readouterr().out
    assert "# seed: 9" in out and "SNN" in out and "OWNN" in out


def test_tune_json(tmp_path, capsys):
    rng = np.random.default_rng(0)
    p = tmp_path / "d.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "y"])
        for i in range(60):
            w.writerow([*(rng.normal(size=2) + i % 2), i % 2])
    assert main(["tune", "--csv", str(p), "--label", "y", "--grid-size", "8", "--standardize"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["grid"]) == 8
    assert out["lambda"] in [g["lambda"] for g in out["grid"] if g["in_top_set"]]


def test_prior_parsing():
    args = build_parser().parse_args(["simulate", "--id", "2", "--d", "5", "--prior", "1/3"])
    assert args.prior == pytest.approx(1 / 3)


def test_errors_return_code_two(tmp_path, capsys):
    assert main(["real", "--csv", str(tmp_path / "missing.csv"), "--label", "y"]) == 2
    assert "stabnn: error:" in capsys.readouterr().err
    assert main(["simulate", "--id", "1", "--d", "3", "--reps", "1"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "stabnn", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0.1.0"
