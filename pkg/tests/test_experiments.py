import csv
import json

import numpy as np
import pytest

from stabnn import experiments as ex
from stabnn.simgen import make_simulation, sample
from stabnn.theory import TheoryConstants


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def two_blob_csv(tmp_path):
    rng = np.random.default_rng(3)
    rows = []
    for i in range(60):
        lab = "yes" if i % 2 else "no"
        x = rng.normal(size=2) + (1.5 if lab == "yes" else 0.0)
        rows.append([f"{x[0]:.6f}", lab, f"{x[1]:.6f}"])
    return _write_csv(tmp_path / "blobs.csv", ["a", "cls", "b"], rows)


# cached constants keep the simulation tests away from the boundary integrator
SIM_CONSTANTS = {"d=2": TheoryConstants.from_b1_b2(0.18, 0.4, 2)}


def test_validation_small_run_shapes_and_ranges():
    res = ex.run_validation([40], 3, seed=1, n_test=200, bayes_n_mc=20_000)
    assert res.metadata["seed"] == 1 and res.metadata["n_replications"] == 3
    assert len(res.records) == 3 * 2 * 2
    for _p, setting, method, metric, rep, value in res.records:
        assert setting == "n=40" and method in ("SNN", "OWNN") and metric in ("risk", "cis")
        assert 0.0 <= value <= 1.0 and rep in range(3)
    assert {e["method"] for e in res.extras} == {"SNN", "OWNN"}
    rows = res.summary()
    assert all(r["n_replications"] == 3 for r in rows)


def test_validation_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ex.run_validation([10], 2)
    with pytest.raises(ValueError):
        ex.run_validation([40], 2, cis_protocol="bootstrap")
    with pytest.raises(ValueError):
        ex.run_validation([40], 0, bayes_n_mc=1000)


@pytest.mark.parametrize("protocol", ["independent", "halves"])
def test_validation_is_deterministic_across_threads(protocol):
    kw = dict(n_test=150, bayes_n_mc=10_000, cis_protocol=protocol)
    a = ex.run_validation([40, 60], 4, seed=7, threads=1, **kw)
    b = ex.run_validation([40, 60], 4, seed=7, threads=3, **kw)
    assert a.records_csv() == b.records_csv()
    assert a.summary_csv() == b.summary_csv()
    c = ex.run_validation([40, 60], 4, seed=8, **kw)
    assert c.records_csv() != a.records_csv()


def test_simulation_deterministic_and_complete():
    kw = dict(n=60, n_test=100, grid_size=10, constants=SIM_CONSTANTS)
    a = ex.run_simulation(1, [{"d": 2}], 2, seed=5, threads=1, **kw)
    b = ex.run_simulation(1, [{"d": 2}], 2, seed=5, threads=2, **kw)
    assert a.records_csv() == b.records_csv()
    methods = {r[2] for r in a.records}
    assert methods == set(ex.METHODS)
    for m in ex.METHODS:
        assert 0 <= a.mean("error", m) <= 1 and 0 <= a.mean("cis", m) <= 1
    assert a.extras[0]["ownn_lambda"] == pytest.approx(0.18 / 0.4)
    # BNN uses q = 1/k from kNN tuning
    k = {r[4]: r[5] for r in a.records if r[2] == "kNN" and r[3] == "k"}
    q = {r[4]: r[5] for r in a.records if r[2] == "BNN" and r[3] == "q"}
    assert all(q[i] == pytest.approx(1 / k[i]) for i in k)


def test_setting_labels():
    assert ex._setting_label({"d": 2}) == "d=2"
    assert ex._setting_label({"prior": 1 / 3, "d": 5}) == "d=5,prior=1/3"
    assert ex._setting_label({"d": 5, "prior": 0.5}) == "d=5,prior=1/2"


def test_write_outputs_carry_metadata(tmp_path):
    res = ex.run_validation([40], 2, seed=3, n_test=100, bayes_n_mc=5000)
    paths = res.write(tmp_path / "out")
    assert [p.name for p in paths] == ["validation_records.csv", "validation_summary.csv", "validation_summary.json"]
    text = paths[0].read_text()
    assert text.startswith("# ")
    assert "# seed: 3" in text and '# version: "0.1.0"' in text
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert body[0] == ",".join(ex.RECORD_FIELDS)
    js = json.loads(paths[2].read_text())
    assert js["metadata"]["seed"] == 3 and js["summary"]


def test_mean_missing_key():
    res = ex.ExperimentResult("x", [("p", "s", "SNN", "cis", 0, 0.1)])
    assert res.mean("cis", "SNN") == 0.1
    with pytest.raises(KeyError):
        res.mean("cis", "kNN")


def test_standard_error_shrinks_with_replications():
    kw = dict(n_test=200, bayes_n_mc=5000)
    small = ex.run_validation([40], 8, seed=11, **kw)
    large = ex.run_validation([40], 32, seed=11, **kw)

    def se(res):
        return next(r["std_error"] for r in res.summary() if r["method"] == "SNN" and r["metric"] == "risk")

    assert se(large) < se(small)


# CSV loading -----------------------------------------------------------------------


def test_load_csv_maps_labels_and_features(two_blob_csv):
    ds, names, mapping = ex.load_csv(two_blob_csv, "cls")
    assert names == ["a", "b"] and ds.n == 60 and ds.d == 2
    assert mapping == {"no": 1, "yes": 2}
    by_index, _, _ = ex.load_csv(two_blob_csv, 1)
    np.testing.assert_array_equal(by_index.X, ds.X)


def test_load_csv_numeric_labels_sorted_numerically(tmp_path):
    p = _write_csv(tmp_path / "n.csv", ["x", "y"], [["0.1", "10"], ["0.2", "9"], ["0.3", "10"]])
    ds, _, mapping = ex.load_csv(p, "y")
    assert mapping == {"9": 1, "10": 2}
    assert ds.y.tolist() == [2, 1, 2]


@pytest.mark.parametrize(
    "rows, match",
    [
        ([["1", "a"], ["2", "b"], ["3", "c"]], "distinct values"),
        ([["1", "a"], ["oops", "b"]], "non-numeric"),
        ([["1", "a"], ["2"]], "fields"),
        ([["1", "a"], ["inf", "b"]], "finite"),
    ],
)
def test_load_csv_errors(tmp_path, rows, match):
    p = _write_csv(tmp_path / "bad.csv", ["x", "lab"], rows)
    with pytest.raises(ex.DataError, match=match):
        ex.load_csv(p, "lab")


def test_load_csv_missing_file_and_column(tmp_path, two_blob_csv):
    with pytest.raises(ex.DataError, match="cannot read"):
        ex.load_csv(tmp_path / "nope.csv", "cls")
    with pytest.raises(ex.DataError, match="no column"):
        ex.load_csv(two_blob_csv, "label")
    with pytest.raises(ex.DataError, match="out of range"):
        ex.load_csv(two_blob_csv, 7)


def test_standardize_uses_training_statistics():
    train = sample(make_simulation(1, d=2), 50, 0)
    test = sample(make_simulation(1, d=2), 20, 1)
    zt, ze = ex.standardize(train, test)
    np.testing.assert_allclose(zt.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(zt.X.std(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(ze.X, (test.X - train.X.mean(0)) / train.X.std(0))


def test_real_run_deterministic(two_blob_csv):
    a = ex.run_real(two_blob_csv, "cls", 2, seed=4, grid_size=8)
    b = ex.run_real(two_blob_csv, "cls", 2, seed=4, grid_size=8, threads=2)
    assert a.records_csv() == b.records_csv()
    assert a.metadata["label_mapping"] == {"no": 1, "yes": 2}
    assert a.name == "real_blobs"


def test_real_constant_labels_give_zero_error_and_cis(tmp_path):
    rows = [[str(i % 4), str(i % 3), "same"] for i in range(48)]
    p = _write_csv(tmp_path / "flat.csv", ["u", "v", "lab"], rows)
    res = ex.run_real(p, "lab", 2, seed=0, grid_size=6)
    for m in ex.METHODS:
        assert res.mean("error", m) == 0.0
        assert res.mean("cis", m) == 0.0


def test_real_needs_enough_rows(tmp_path):
    p = _write_csv(tmp_path / "tiny.csv", ["x", "lab"], [[str(i), str(i % 2)] for i in range(10)])
    with pytest.raises(ex.DataError, match="at least 40"):
        ex.run_real(p, "lab", 1)
