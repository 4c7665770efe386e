"""Time the numba and numpy vote kernels on the same inputs and check they agree bit for bit.

    python3 benchmarks/bench_kernels.py [--n 2000] [--queries 1000] [--d 5] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stabnn import _kernels
from stabnn.weights import SnnParams, snn_weights


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--queries", type=int, default=1000)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    rng = np.random.default_rng(a.seed)
    X = rng.standard_normal((a.n, a.d))
    is1 = (rng.random(a.n) < 0.5).astype(np.float64)
    Q = rng.standard_normal((a.queries, a.d))
    w = snn_weights(SnnParams(1.0, a.n, a.d)).w

    print(f"n={a.n} queries={a.queries} d={a.d} (best of {a.repeat})")
    ref = {
        "order": _kernels.neighbor_order_numpy(X, Q),
        "labels": _kernels.sorted_labels_numpy(X, is1, Q),
        "scores": _kernels.vote_scores_numpy(X, is1, Q, w),
    }
    t_np = best_of(lambda: _kernels.vote_scores_numpy(X, is1, Q, w), a.repeat)
    print(f"  numpy  vote_scores: {t_np * 1e3:9.2f} ms")
    if not _kernels.HAVE_NUMBA:
        print("  numba not installed; skipping")
        return
    got = {
        "order": _kernels.neighbor_order_numba(X, Q),
        "labels": _kernels.sorted_labels_numba(X, is1, Q),
        "scores": _kernels.vote_scores_numba(X, is1, Q, w),
    }
    t_nb = best_of(lambda: _kernels.vote_scores_numba(X, is1, Q, w), a.repeat)
    print(f"  numba  vote_scores: {t_nb * 1e3:9.2f} ms  (speed-up x{t_np / t_nb:.2f})")
    for key in ref:
        same = np.array_equal(ref[key], got[key])
        print(f"  {key:7s} identical: {same}")
        if not same:
            raise SystemExit(f"{key} differs between backends")


if __name__ == "__main__":
    main()
