"""Hot loops: neighbour ordering and weighted votes.

Two interchangeable implementations live here. The numba one is used when
numba imports and ``STABNN_DISABLE_NUMBA`` is unset (or "0"); otherwise the
pure-numpy one. Both produce bit-identical results: squared distances are
accumulated coordinate by coordinate in the same order, and ordering uses a
stable sort so equal distances keep the original index order.
"""

from __future__ import annotations

import os

import numpy as np

_CHUNK_ELEMS = 4_000_000


def _numpy_sq_dists(train_x: np.ndarray, query_x: np.ndarray) -> np.ndarray:
    m, n = query_x.shape[0], train_x.shape[0]
    out = np.zeros((m, n))
    for j in range(train_x.shape[1]):
        diff = query_x[:, j, None] - train_x[None, :, j]
        out += diff * diff
    return out


def neighbor_order_numpy(train_x: np.ndarray, query_x: np.ndarray) -> np.ndarray:
    """(m, n) int64 array; row r lists training indices by distance to query r."""
    n = train_x.shape[0]
    out = np.empty((query_x.shape[0], n), dtype=np.int64)
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for s in range(0, query_x.shape[0], step):
        dist = _numpy_sq_dists(train_x, query_x[s : s + step])
        out[s : s + step] = np.argsort(dist, axis=1, kind="stable")
    return out


def sorted_labels_numpy(train_x: np.ndarray, train_is1: np.ndarray, query_x: np.ndarray) -> np.ndarray:
    """(m, n) float array of ``1{Y_(i) = 1}`` in neighbour order for each query."""
    n = train_x.shape[0]
    out = np.empty((query_x.shape[0], n))
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for s in range(0, query_x.shape[0], step):
        dist = _numpy_sq_dists(train_x, query_x[s : s + step])
        out[s : s + step] = train_is1[np.argsort(dist, axis=1, kind="stable")]
    return out


def vote_scores_numpy(train_x, train_is1, query_x, w) -> np.ndarray:
    k = int(np.flatnonzero(w > 0)[-1]) + 1
    n = train_x.shape[0]
    scores = np.empty(query_x.shape[0])
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for s in range(0, query_x.shape[0], step):
        dist = _numpy_sq_dists(train_x, query_x[s : s + step])
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        lab = train_is1[order]
        # sequential accumulation keeps the numpy and numba paths bit-identical
        acc = np.zeros(lab.shape[0])
        for i in range(k):
            acc += w[i] * lab[:, i]
        scores[s : s + step] = acc
    return scores


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _row_sq_dists(train_x, q, out):
        n, d = train_x.shape
        for i in range(n):
            out[i] = 0.0
        for j in range(d):
            qj = q[j]
            for i in range(n):
                diff = qj - train_x[i, j]
                out[i] += diff * diff

    @njit(cache=True, nogil=True)
    def neighbor_order_numba(train_x, query_x):
        m = query_x.shape[0]
        n = train_x.shape[0]
        out = np.empty((m, n), dtype=np.int64)
        dist = np.empty(n)
        for r in range(m):
            _row_sq_dists(train_x, query_x[r], dist)
            out[r] = np.argsort(dist, kind="mergesort")
        return out

    @njit(cache=True, nogil=True)
    def sorted_labels_numba(train_x, train_is1, query_x):
        m = query_x.shape[0]
        n = train_x.shape[0]
        out = np.empty((m, n))
        dist = np.empty(n)
        for r in range(m):
            _row_sq_dists(train_x, query_x[r], dist)
            order = np.argsort(dist, kind="mergesort")
            for i in range(n):
                out[r, i] = train_is1[order[i]]
        return out

    @njit(cache=True, nogil=True)
    def _top_k(dist, k, cand):
        # same prefix as a full stable sort: keep everything up to the k-th
        # smallest distance, in index order, then stable-sort that short list
        t = np.partition(dist, k - 1)[k - 1]
        c = 0
        for i in range(dist.shape[0]):
            if dist[i] <= t:
                cand[c] = i
                c += 1
        sub = cand[:c]
        return sub[np.argsort(dist[sub], kind="mergesort")][:k]

    @njit(cache=True, nogil=True)
    def vote_scores_numba(train_x, train_is1, query_x, w):
        m = query_x.shape[0]
        n = train_x.shape[0]
        k = 0
        for i in range(n):
            if w[i] > 0:
                k = i + 1
        scores = np.empty(m)
        dist = np.empty(n)
        cand = np.empty(n, dtype=np.int64)
        for r in range(m):
            _row_sq_dists(train_x, query_x[r], dist)
            if 4 * k < n:
                order = _top_k(dist, k, cand)
            else:
                order = np.argsort(dist, kind="mergesort")
            acc = 0.0
            for i in range(k):
                acc += w[i] * train_is1[order[i]]
            scores[r] = acc
        return scores


def numba_enabled() -> bool:
    return HAVE_NUMBA and os.environ.get("STABNN_DISABLE_NUMBA", "0") in ("", "0")


if numba_enabled():
    neighbor_order = neighbor_order_numba
    sorted_labels = sorted_labels_numba
    vote_scores = vote_scores_numba
    BACKEND = "numba"
else:
    neighbor_order = neighbor_order_numpy
    sorted_labels = sorted_labels_numpy
    vote_scores = vote_scores_numpy
    BACKEND = "numpy"
