"""Command-line entry point: ``stabnn <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__, experiments, theory
from .simgen import make_simulation
from .tuning import make_snn_grid, tune_snn
from .weights import BnnParams, SnnParams, bnn_weights, knn_weights, ownn_weights, snn_weights


def _common(p: argparse.ArgumentParser, reps: int | None = None):
    p.add_argument("--seed", type=int, default=42)
    if reps is not None:
        p.add_argument("--reps", type=int, default=reps, help="number of replications")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: print to stdout)")
    p.add_argument("--threads", type=int, default=1)


def _emit(result: experiments.ExperimentResult, out: Path | None):
    if out is None:
        sys.stdout.write(result.summary_csv())
    else:
        for p in result.write(out):
            print(p)


def _parse_prior(s: str) -> float:
    if "/" in s:
        a, b = s.split("/")
        return float(a) / float(b)
    return float(s)


def cmd_theory(a):
    tc = theory.VALIDATION_CONSTANTS
    out = {
        "version": __version__,
        "validation_constants": {"b1": tc.b1, "b2": tc.b2, "b3": tc.b3, "d": tc.d},
        "b1_closed_form_mu1_d2": theory.gaussian_b1_closed_form(1.0, 2),
        "snn_over_ownn_lambda0_1": dict(zip(("regret_ratio", "cis_ratio"), theory.snn_ownn_ratios(tc, tc.snn_lambda()))),
        "cis_ratios": [
            {
                "d": d,
                "ownn_knn": theory.cis_ratio_ownn_knn(d),
                "bnn_knn": theory.cis_ratio_bnn_knn(d),
                "bnn_ownn": theory.cis_ratio_bnn_ownn(d),
                "relative_gain_b1_0.1": theory.relative_gain(0.1, d),
            }
            for d in range(1, a.max_d + 1)
        ],
    }
    curves = []
    for n in a.n_list:
        for m in ("SNN", "OWNN"):
            regret, cis, k = theory.validation_curves(n, m, tc)
            curves.append({"n": n, "method": m, "k": k, "regret": regret, "cis": cis})
    out["validation_curves"] = curves
    if a.numeric is not None:
        problem = make_simulation(a.numeric[0], **({} if len(a.numeric) == 1 else {"d": int(a.numeric[1])}))
        num = theory.gaussian_constants_numeric(problem, n_mc=a.n_mc, seed=a.seed)
        out["numeric_constants"] = {"problem": problem.name, "b1": num.b1, "b2": num.b2, "b3": num.b3}
    text = json.dumps(out, indent=2, sort_keys=True)
    if a.out is None:
        print(text)
        return
    a.out.mkdir(parents=True, exist_ok=True)
    (a.out / "theory.json").write_text(text)
    with open(a.out / "validation_curves.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["n", "method", "k", "regret", "cis"], lineterminator="\n")
        fh.write(f"# seed: {a.seed}\n# version: {json.dumps(__version__)}\n")
        w.writeheader()
        w.writerows(curves)
    print(a.out / "theory.json")


def cmd_weights(a):
    m = a.method.lower()
    if m == "knn":
        w = knn_weights(a.k, a.n)
    elif m == "bnn":
        w = bnn_weights(BnnParams(a.q, a.n))
    elif m == "snn":
        w = snn_weights(SnnParams(a.lam, a.n, a.d))
    else:
        w = ownn_weights(a.n, a.d, a.b1, a.b2)
    lines = ["rank,weight"] + [f"{i + 1},{float(v)!r}" for i, v in enumerate(w.w)]
    text = "\n".join(lines) + "\n"
    if a.out is None:
        sys.stdout.write(text)
    else:
        a.out.mkdir(parents=True, exist_ok=True)
        p = a.out / f"weights_{m}_n{a.n}.csv"
        p.write_text(text)
        print(p)


def cmd_validate(a):
    _emit(experiments.run_validation(a.n_list, a.reps, a.seed, cis_protocol=a.protocol, threads=a.threads), a.out)


def cmd_simulate(a):
    settings = None
    if a.d is not None:
        settings = [{"d": a.d} if a.prior is None else {"d": a.d, "prior": a.prior}]
    res = experiments.run_simulation(a.id, settings, a.reps, a.seed, n=a.n, threads=a.threads)
    _emit(res, a.out)


def cmd_real(a):
    _emit(experiments.run_real(a.csv, a.label, a.reps, a.seed, threads=a.threads), a.out)


def cmd_tune(a):
    ds, _, _ = experiments.load_csv(a.csv, a.label)
    if a.standardize:
        ds, _ = experiments.standardize(ds, ds)
    res = tune_snn(ds, make_snn_grid(ds.n, ds.d, K=a.grid_size), a.seed, a.top_fraction)
    out = {"seed": a.seed, "version": __version__, "lambda": res.lam, "k_star": res.k_star,
           "threshold": res.threshold, "grid": res.table()}
    text = json.dumps(out, indent=2)
    if a.out is None:
        print(text)
    else:
        a.out.mkdir(parents=True, exist_ok=True)
        p = a.out / "tune.json"
        p.write_text(text)
        print(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stabnn", description="Stabilized nearest-neighbour classification experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="constants, limiting ratios and validation curves as JSON")
    _common(p)
    p.add_argument("--n-list", type=int, nargs="+", default=[50, 100, 200, 500])
    p.add_argument("--max-d", type=int, default=20)
    p.add_argument("--numeric", nargs="+", metavar=("ID", "D"), help="also integrate B1/B2 for a problem, e.g. 'validation' or '1 4'")
    p.add_argument("--n-mc", type=int, default=1_000_000)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("weights", help="dump a weight vector as CSV")
    _common(p)
    p.add_argument("--method", choices=["knn", "bnn", "snn", "ownn"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--q", type=float, default=0.1)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--b1", type=float, default=theory.VALIDATION_CONSTANTS.b1)
    p.add_argument("--b2", type=float, default=theory.VALIDATION_CONSTANTS.b2)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("validate", help="bivariate validation study")
    _common(p, reps=100)
    p.add_argument("--n-list", type=int, nargs="+", default=[50, 100, 200, 500])
    p.add_argument("--protocol", choices=["independent", "halves"], default="independent")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="kNN/BNN/OWNN/SNN comparison on a synthetic family")
    _common(p, reps=100)
    p.add_argument("--id", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--d", type=int, default=None, help="single dimension (default: all settings)")
    p.add_argument("--prior", type=_parse_prior, default=None, help="class-1 prior, e.g. 1/3")
    p.add_argument("--n", type=int, default=200)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("real", help="random equal-size splits of a CSV dataset")
    _common(p, reps=100)
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--label", required=True, help="label column name or index")
    p.set_defaults(func=cmd_real)

    p = sub.add_parser("tune", help="two-stage lambda selection on a CSV dataset")
    _common(p)
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--top-fraction", type=float, default=0.10)
    p.add_argument("--standardize", action="store_true", help="z-score features before tuning")
    p.set_defaults(func=cmd_tune)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"stabnn: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
