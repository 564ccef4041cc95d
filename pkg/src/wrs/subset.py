"""Weighted subset sampling: item ``i`` is included independently with
probability ``w_i <= 1``.

Items are bucketed by magnitude, ``2^-i >= w > 2^-(i+1)`` for ``i < L`` and
everything ``<= 2^-L`` in bucket ``L = ceil(log2 n)``.  Inside a bucket with
maximum ``wbar`` a geometric skip jumps to the next candidate, which is kept
with probability ``w / wbar``.  Expected work is ``O(1 + W)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import RngStream, as_table, parallel_map, prefix_sums
from .outsens import _counting_sort


def bucket_index(w: np.ndarray, L: int) -> np.ndarray:
    """``i`` with ``2^-i >= w > 2^-(i+1)``, capped at ``L``."""
    m, e = np.frexp(np.asarray(w, dtype=np.float64))
    i = np.where(m > 0.5, -e, 1 - e).astype(np.int64)
    return np.minimum(i, L)


@dataclass
class SubsetSampler:
    weights: np.ndarray
    total: float
    L: int
    order: np.ndarray  # item ids sorted by bucket
    sorted_w: np.ndarray
    bucket_start: np.ndarray  # bucket i occupies order[bucket_start[i]:bucket_start[i+1]]
    wbar: np.ndarray  # actual max weight per bucket (0 if empty)
    prefix: np.ndarray  # inclusive prefix sums of sorted_w
    bounds: np.ndarray  # worker k owns sorted positions bounds[k]:bounds[k+1]

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def workers(self) -> int:
        return self.bounds.size - 1

    def bucket_members(self, i: int) -> np.ndarray:
        return self.sorted_w[self.bucket_start[i]:self.bucket_start[i + 1]]


def worker_bounds(prefix: np.ndarray, total: float, workers: int) -> np.ndarray:
    """Worker ``k`` gets the items whose prefix value lies in
    ``[k W/p, (k+1) W/p)``; boundaries come from comparing neighbors."""
    n = prefix.size
    pe = np.minimum(np.floor(prefix * workers / total), workers - 1).astype(np.int64)
    bounds = np.full(workers + 1, n, np.int64)
    bounds[: pe[0] + 1] = 0
    change = np.flatnonzero(pe[1:] != pe[:-1]) + 1
    for j in change:  # at most workers - 1 entries
        bounds[pe[j - 1] + 1: pe[j] + 1] = j
    return bounds


def build_subset(wt, workers: int = 1) -> SubsetSampler:
    wt = as_table(wt)
    if wt.w_max > 1.0:
        raise ValueError(f"subset sampling needs all weights <= 1, got max {wt.w_max!r}")
    n = wt.n
    workers = max(1, int(workers))
    L = max(0, math.ceil(math.log2(n))) if n > 1 else 0
    keys = bucket_index(wt.weights, L)
    order, start = _counting_sort(keys, L + 1)
    sw = wt.weights[order]
    wbar = np.array([sw[start[i]:start[i + 1]].max() if start[i + 1] > start[i] else 0.0
                     for i in range(L + 1)])
    prefix = prefix_sums(sw, workers)
    return SubsetSampler(wt.weights, wt.total, L, order, sw, start, wbar, prefix,
                         worker_bounds(prefix, prefix[-1], workers))


@numba.njit(cache=True, nogil=True)
def _push(out, pos, item):
    if pos >= out.size:
        grown = np.empty(max(16, 2 * out.size), np.int64)
        grown[:pos] = out[:pos]
        out = grown
    out[pos] = item
    return out, pos + 1


@numba.njit(cache=True, nogil=True)
def _sample_range(order, sw, start, wbar, lo, hi, gen, out, pos):
    nb = wbar.size
    for b in range(nb):
        s = max(lo, start[b])
        e = min(hi, start[b + 1])
        if s >= e:
            continue
        wb = wbar[b]
        c = s
        if wb >= 1.0:
            for c in range(s, e):
                if gen.random() * wb < sw[c]:
                    out, pos = _push(out, pos, order[c])
            continue
        denom = math.log1p(-wb)
        while True:
            u = gen.random()
            while u == 0.0:
                u = gen.random()
            c += np.int64(math.floor(math.log(u) / denom))
            if c >= e:
                break
            if gen.random() * wb < sw[c]:
                out, pos = _push(out, pos, order[c])
            c += 1
    return out, pos


def sample_subset(ss: SubsetSampler, stream: RngStream, workers: int | None = None) -> np.ndarray:
    """Included item ids.  Worker ``k`` scans its range on ``stream.child(k)``;
    the per-worker parts are concatenated in worker order."""
    nw = ss.workers

    def run(k):
        out, pos = _sample_range(ss.order, ss.sorted_w, ss.bucket_start, ss.wbar,
                                 ss.bounds[k], ss.bounds[k + 1], stream.child(k).gen,
                                 np.empty(16, np.int64), 0)
        return out[:pos]

    parts = parallel_map(run, range(nw), nw if workers is None else workers)
    return np.concatenate(parts) if parts else np.empty(0, np.int64)


@numba.njit(cache=True, nogil=True)
def _repeated(order, sw, start, wbar, bounds, trials, gen, hits, sizes):
    buf = np.empty(16, np.int64)
    for t in range(trials):
        pos = 0
        for k in range(bounds.size - 1):
            buf, pos = _sample_range(order, sw, start, wbar, bounds[k], bounds[k + 1], gen, buf, pos)
        sizes[t] = pos
        if hits.shape[0] > 0:
            for q in range(pos):
                hits[t, buf[q]] = 1


def sample_subset_repeated(ss: SubsetSampler, trials: int, stream: RngStream, dense: bool = True):
    """``trials`` queries on one generator over the same worker ranges.

    Returns ``(hits, sizes)``: a ``trials x n`` 0/1 matrix (empty unless
    ``dense``) and the sample size per trial.
    """
    hits = np.zeros((trials if dense else 0, ss.n), np.uint8)
    sizes = np.empty(trials, np.int64)
    _repeated(ss.order, ss.sorted_w, ss.bucket_start, ss.wbar, ss.bounds, trials, stream.gen, hits, sizes)
    return hits, sizes
