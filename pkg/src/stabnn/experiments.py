"""Monte Carlo studies: validation curves, synthetic comparisons and real-data splits.

Each study returns an :class:`ExperimentResult` holding tidy per-replication
records, a summary and the run metadata. Replication ``r`` is seeded with
``seed + r``, so results do not depend on the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .classifier import WeightRule, WnnClassifier, bnn_rule, knn_rule, snn_rule
from .core import Dataset, std_error
from .evaluation import empirical_cis, empirical_risk, split_halves
from .simgen import bayes_risk_mc, make_simulation, problem_settings, sample, validation_problem
from .theory import VALIDATION_CONSTANTS, TheoryConstants, gaussian_constants_numeric, validation_curves
from .tuning import DEFAULT_GRID_SIZE, make_snn_grid, tune_knn, tune_snn, tune_snn_risk_only
from .weights import SnnParams, snn_k_star

N_TEST = 1000
RECORD_FIELDS = ("problem", "setting", "method", "metric", "replication", "value")
SUMMARY_FIELDS = ("problem", "setting", "method", "metric", "n_replications", "mean", "std_error")


class DataError(ValueError):
    """Raised for CSV input that cannot be turned into a binary dataset."""


@dataclass
class ExperimentResult:
    name: str
    records: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    # per-setting extras that do not vary by replication (theory curves, oracle constants)
    extras: list[dict] = field(default_factory=list)

    def summary(self) -> list[dict]:
        groups: dict[tuple, list[float]] = defaultdict(list)
        for prob, setting, method, metric, _rep, value in self.records:
            groups[(prob, setting, method, metric)].append(value)
        rows = []
        for key in sorted(groups, key=lambda k: tuple(map(str, k))):
            vals = groups[key]
            rows.append(dict(zip(SUMMARY_FIELDS, (*key, len(vals), float(np.mean(vals)), std_error(vals)))))
        return rows

    def mean(self, metric: str, method: str, setting: str | None = None) -> float:
        vals = [
            r[5]
            for r in self.records
            if r[3] == metric and r[2] == method and (setting is None or r[1] == setting)
        ]
        if not vals:
            raise KeyError(f"no records for metric={metric!r}, method={method!r}, setting={setting!r}")
        return float(np.mean(vals))

    def _header(self) -> str:
        lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(self.metadata.items())]
        return "\n".join(lines) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self._header())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in sorted(self.records, key=lambda r: (str(r[0]), str(r[1]), r[2], r[3], r[4])):
            w.writerow([*rec[:5], repr(float(rec[5]))])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self._header())
        w = csv.DictWriter(buf, SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in self.summary():
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"name": self.name, "metadata": self.metadata, "summary": self.summary(), "extras": self.extras},
            sort_keys=True,
            indent=2,
        )

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for suffix, text in (("records.csv", self.records_csv()), ("summary.csv", self.summary_csv()), ("summary.json", self.to_json())):
            p = out / f"{self.name}_{suffix}"
            p.write_text(text)
            paths.append(p)
        return paths


def _metadata(seed: int, **settings) -> dict:
    return {"seed": seed, "version": __version__, **settings}


def _run_reps(fn: Callable[[int], list[tuple]], n_reps: int, threads: int) -> list[tuple]:
    """Run ``fn(rep)`` for every replication and concatenate in replication order."""
    if n_reps < 1:
        raise ValueError("n_replications must be positive")
    if threads <= 1:
        parts = [fn(r) for r in range(n_reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(fn, range(n_reps)))
    return [rec for part in parts for rec in part]


def _fit(train: Dataset, rule: WeightRule) -> WnnClassifier:
    return WnnClassifier.fit(train, rule)


def _halves_cis(train: Dataset, rule: WeightRule, test_x: np.ndarray, rng: np.random.Generator) -> float:
    ia, ib = split_halves(train.n, rng)
    return empirical_cis(
        _fit(train.subset(ia), rule).predict_batch(test_x),
        _fit(train.subset(ib), rule).predict_batch(test_x),
    )


# validation study ---------------------------------------------------------------


def run_validation(
    n_list: Sequence[int] = (50, 100, 200, 500),
    n_replications: int = 100,
    seed: int = 42,
    *,
    n_test: int = N_TEST,
    cis_protocol: str = "independent",
    constants: TheoryConstants = VALIDATION_CONSTANTS,
    bayes_n_mc: int = 1_000_000,
    threads: int = 1,
) -> ExperimentResult:
    """Bivariate validation problem: SNN (CIS penalty 1) and OWNN with fixed theory constants.

    ``cis_protocol="independent"`` trains the two classifiers on independent
    samples of size n; ``"halves"`` splits one sample of size n in two.
    Estimated risk is the mean test error of the two classifiers.
    """
    if any(n < 20 for n in n_list):
        raise ValueError("each n must be at least 20")
    if cis_protocol not in ("independent", "halves"):
        raise ValueError("cis_protocol must be 'independent' or 'halves'")
    problem = validation_problem()
    lams = {"SNN": constants.snn_lambda(), "OWNN": constants.ownn_lambda()}
    bayes = bayes_risk_mc(problem, bayes_n_mc, seed)
    result = ExperimentResult(
        "validation",
        metadata=_metadata(
            seed,
            n_list=list(n_list),
            n_replications=n_replications,
            n_test=n_test,
            cis_protocol=cis_protocol,
            b1=constants.b1,
            b2=constants.b2,
            bayes_risk=bayes,
            test_sets="fresh draw per replication",
        ),
    )
    for n in n_list:
        for method in lams:
            regret, cis, k = validation_curves(n, method, constants)
            result.extras.append(
                {"setting": f"n={n}", "method": method, "k": k, "asymptotic_regret": regret,
                 "asymptotic_risk": bayes + regret, "asymptotic_cis": cis}
            )

        def one(rep: int, n=n) -> list[tuple]:
            rng = np.random.default_rng([seed + rep, n])
            d1 = sample(problem, n, rng)
            d2 = sample(problem, n, rng)
            test = sample(problem, n_test, rng)
            split = split_halves(n, rng) if cis_protocol == "halves" else None
            recs = []
            for method, lam in lams.items():
                rule = snn_rule(lam, problem.d)
                if split is None:
                    pa = _fit(d1, rule).predict_batch(test.X)
                    pb = _fit(d2, rule).predict_batch(test.X)
                else:
                    pa = _fit(d1.subset(split[0]), rule).predict_batch(test.X)
                    pb = _fit(d1.subset(split[1]), rule).predict_batch(test.X)
                risk = 0.5 * (empirical_risk(pa, test.y) + empirical_risk(pb, test.y))
                recs.append(("validation", f"n={n}", method, "risk", rep, risk))
                recs.append(("validation", f"n={n}", method, "cis", rep, empirical_cis(pa, pb)))
            return recs

        result.records.extend(_run_reps(one, n_replications, threads))
    return result


# synthetic comparisons ----------------------------------------------------------


METHODS = ("kNN", "BNN", "OWNN", "SNN")


def _compare_methods(train: Dataset, test: Dataset, rules: dict[str, WeightRule], rng) -> list[tuple[str, str, float]]:
    out = []
    for method, rule in rules.items():
        err = empirical_risk(_fit(train, rule).predict_batch(test.X), test.y)
        out.append((method, "error", err))
        out.append((method, "cis", _halves_cis(train, rule, test.X, rng)))
    return out


def _tuned_rules(train: Dataset, seed: int, grid_size: int, ownn: float | None):
    """Tune kNN and SNN on ``train``; return the four weight rules and the tuned values."""
    d = train.d
    k_hat = tune_knn(train, seed)
    grid = make_snn_grid(train.n, d, K=grid_size)
    snn = tune_snn(train, grid, seed)
    lam_ownn = tune_snn_risk_only(train, grid, seed) if ownn is None else ownn
    rules = {
        "kNN": knn_rule(k_hat),
        "BNN": bnn_rule(1.0 / k_hat),
        "OWNN": snn_rule(lam_ownn, d),
        "SNN": snn_rule(snn.lam, d),
    }
    params = [
        ("kNN", "k", float(k_hat)),
        ("BNN", "q", 1.0 / k_hat),
        ("OWNN", "lambda", lam_ownn),
        ("OWNN", "k", float(snn_k_star(SnnParams(lam_ownn, train.n, d)))),
        ("SNN", "lambda", snn.lam),
        ("SNN", "k", float(snn.k_star)),
    ]
    return rules, params


def run_simulation(
    sim_id,
    settings: Iterable[dict] | None = None,
    n_replications: int = 100,
    seed: int = 42,
    *,
    n: int = 200,
    n_test: int = N_TEST,
    grid_size: int = DEFAULT_GRID_SIZE,
    constants: dict | None = None,
    threads: int = 1,
) -> ExperimentResult:
    """Compare kNN, BNN, OWNN and SNN on a synthetic problem family.

    kNN's k and SNN's lambda are tuned on each training set; BNN uses
    ``q = 1/k`` with the tuned k; OWNN uses the problem's own constants
    (computed once per setting unless given in ``constants`` keyed by the
    setting label). Test error is from the classifier trained on the full
    training set, CIS from two classifiers trained on its random halves.
    """
    settings = list(problem_settings(sim_id) if settings is None else settings)
    constants = dict(constants or {})
    result = ExperimentResult(
        f"simulation{sim_id}",
        metadata=_metadata(
            seed,
            sim_id=sim_id,
            settings=settings,
            n=n,
            n_replications=n_replications,
            n_test=n_test,
            grid_size=grid_size,
            bnn_q="1/k_hat from kNN tuning",
            ownn="oracle lambda = B1/B2 from boundary integrals",
            test_sets="fresh draw per replication",
        ),
    )
    for s_idx, st in enumerate(settings):
        problem = make_simulation(sim_id, **st)
        label = _setting_label(st)
        tc = constants.get(label)
        if tc is None:
            tc = gaussian_constants_numeric(problem, seed=seed)
        lam_ownn = tc.ownn_lambda()
        result.extras.append({"setting": label, "problem": problem.to_dict(), "b1": tc.b1, "b2": tc.b2, "ownn_lambda": lam_ownn})

        def one(rep: int, problem=problem, label=label, s_idx=s_idx) -> list[tuple]:
            rs = seed + rep
            rng = np.random.default_rng([rs, s_idx])
            train = sample(problem, n, rng)
            test = sample(problem, n_test, rng)
            rules, params = _tuned_rules(train, rs, grid_size, lam_ownn)
            recs = [(problem.name, label, m, metric, rep, v) for m, metric, v in params]
            recs += [(problem.name, label, m, metric, rep, v) for m, metric, v in _compare_methods(train, test, rules, rng)]
            return recs

        result.records.extend(_run_reps(one, n_replications, threads))
    return result


def _setting_label(st: dict) -> str:
    parts = []
    for k in sorted(st):
        v = st[k]
        if isinstance(v, float) and not float(v).is_integer():
            v = f"1/{round(1 / v)}" if math.isclose(1 / v, round(1 / v)) else f"{v:g}"
        parts.append(f"{k}={v}")
    return ",".join(parts)


# real data ----------------------------------------------------------------------


def load_csv(path, label_column) -> tuple[Dataset, list[str], dict]:
    """Read a header-row CSV with numeric features and one binary label column.

    ``label_column`` is a header name, or an integer column index. Labels are
    mapped to {1, 2} by sorted order (numeric order if every label parses as a
    number). Returns the dataset, the feature names and the label mapping.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if str(label_column) in header:
        li = header.index(str(label_column))
    elif isinstance(label_column, int) or str(label_column).lstrip("-").isdigit():
        li = int(label_column)
        if not -len(header) <= li < len(header):
            raise DataError(f"{path}: label column index {li} out of range")
        li %= len(header)
    else:
        raise DataError(f"{path}: no column named {label_column!r}")
    feats = [j for j in range(len(header)) if j != li]
    if not feats:
        raise DataError(f"{path}: no feature columns")
    X = np.empty((len(rows) - 1, len(feats)))
    raw = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {r} has {len(row)} fields, header has {len(header)}")
        for c, j in enumerate(feats):
            try:
                X[r - 2, c] = float(row[j])
            except ValueError:
                raise DataError(f"{path}: non-numeric feature {row[j]!r} in column {header[j]!r}, line {r}") from None
        raw.append(row[li].strip())
    if not np.isfinite(X).all():
        raise DataError(f"{path}: features must be finite")
    values = sorted(set(raw))
    try:
        values = sorted(values, key=float)
    except ValueError:
        pass
    if len(values) > 2:
        raise DataError(f"{path}: label column {header[li]!r} has {len(values)} distinct values; need at most 2")
    mapping = {v: i + 1 for i, v in enumerate(values)}
    y = np.array([mapping[v] for v in raw])
    return Dataset(X, y), [header[j] for j in feats], mapping


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset]:
    """Z-score both sets with the training mean and standard deviation (constant columns left centred)."""
    mu = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return Dataset((train.X - mu) / sd, train.y), Dataset((test.X - mu) / sd, test.y)


def run_real(
    csv_path,
    label_column,
    n_replications: int = 100,
    seed: int = 42,
    *,
    grid_size: int = DEFAULT_GRID_SIZE,
    threads: int = 1,
) -> ExperimentResult:
    """Random equal-size train/test splits of a CSV dataset.

    OWNN has no oracle constants here, so its lambda is the SNN grid value
    with the smallest cross-validated risk.
    """
    ds, names, mapping = load_csv(csv_path, label_column)
    if ds.n < 40:
        raise DataError(f"{csv_path}: need at least 40 rows, got {ds.n}")
    stem = Path(csv_path).stem
    result = ExperimentResult(
        f"real_{stem}",
        metadata=_metadata(
            seed,
            source=os.path.basename(str(csv_path)),
            label_column=str(label_column),
            label_mapping=mapping,
            features=names,
            n=ds.n,
            n_replications=n_replications,
            grid_size=grid_size,
            standardization="z-score from training portion",
            bnn_q="1/k_hat from kNN tuning",
            ownn="lambda minimising cross-validated risk",
        ),
    )

    def one(rep: int) -> list[tuple]:
        rs = seed + rep
        rng = np.random.default_rng(rs)
        itr, ite = split_halves(ds.n, rng)
        train, test = standardize(ds.subset(itr), ds.subset(ite))
        rules, params = _tuned_rules(train, rs, grid_size, None)
        recs = [(stem, "split=1/2", m, metric, rep, v) for m, metric, v in params]
        recs += [(stem, "split=1/2", m, metric, rep, v) for m, metric, v in _compare_methods(train, test, rules, rng)]
        return recs

    result.records.extend(_run_reps(one, n_replications, threads))
    return result
