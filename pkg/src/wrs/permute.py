"""Weighted random permutation through integer-bucketed exponential keys.

Each item gets ``e_i = -ln(r_i) / w_i``; sorting by ``e_i`` gives the
permutation.  Instead of a comparison sort over all keys, the monotone map
``f = n * ln(e_i * n * w_max)`` is floored to an integer bucket in
``[0, K]`` with ``K = ceil(n * ln(n * U * ln n))``.  Values below zero go to
bucket ``-1`` and values at or above ``K`` to bucket ``K``.  A counting sort
on buckets followed by sorting each bucket by the exact key yields the same
order as sorting by the exact key, and buckets hold O(1) items on average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import BLOCK, RngStream, as_table, parallel_map


def key_range(n: int, ratio: float) -> int:
    if n < 2:
        return 0
    return max(1, math.ceil(n * math.log(n * ratio * math.log(n))))


def uses_counting_sort(n: int, K: int) -> bool:
    return n >= 2 and K <= 8 * n * math.log(n) + 64


@numba.njit(cache=True, nogil=True)
def _keys(r, w, w_max, K, e, bucket):
    n = r.size
    c = n * w_max
    clamped = 0
    for i in range(n):
        e[i] = -math.log(r[i]) / w[i]
        f = n * math.log(e[i] * c)
        if f < 0.0:
            bucket[i] = -1
            clamped += 1
        elif f >= K:
            bucket[i] = K
            clamped += 1
        else:
            bucket[i] = np.int64(f)
    return clamped


@numba.njit(cache=True, nogil=True)
def _bucket_sort(e, bucket, K, order, counts):
    """Counting sort on ``bucket + 1`` then insertion sort inside buckets.

    Both passes are stable, so equal keys keep index order.
    """
    n = e.size
    counts[:] = 0
    for i in range(n):
        counts[bucket[i] + 2] += 1
    for b in range(1, counts.size):
        counts[b] += counts[b - 1]
    for i in range(n):
        b = bucket[i] + 1
        order[counts[b]] = i
        counts[b] += 1
    # counts[b] is now the end of bucket b - 1 (shifted); walk segments
    lo = 0
    for b in range(K + 2):
        hi = counts[b]
        for p in range(lo + 1, hi):
            x = order[p]
            q = p - 1
            while q >= lo and e[order[q]] > e[x]:
                order[q + 1] = order[q]
                q -= 1
            order[q + 1] = x
        lo = hi


def _draw_uniforms(n: int, stream: RngStream, workers: int) -> np.ndarray:
    r = np.empty(n)

    def fill(bi):
        lo, hi = bi * BLOCK, min(n, (bi + 1) * BLOCK)
        g = stream.child(bi).gen
        u = g.random(hi - lo)
        while True:
            zero = u == 0.0
            if not zero.any():
                break
            u[zero] = g.random(int(zero.sum()))
        r[lo:hi] = u

    parallel_map(fill, range(math.ceil(n / BLOCK)), workers)
    return r


@dataclass
class PermKeys:
    keys: np.ndarray  # exact exponential keys
    buckets: np.ndarray  # integer buckets in {-1} | [0, K]
    K: int
    clamped: int


def permutation_keys(wt, stream: RngStream, workers: int = 1) -> PermKeys:
    wt = as_table(wt)
    n = wt.n
    r = _draw_uniforms(n, stream, workers)
    K = key_range(n, wt.ratio)
    e = np.empty(n)
    bucket = np.empty(n, np.int64)
    clamped = 0
    if n >= 2:
        clamped = _keys(r, wt.weights, wt.w_max, K, e, bucket)
    else:
        e[:] = -np.log(r) / wt.weights
        bucket[:] = 0
    return PermKeys(e, bucket, K, int(clamped))


def order_from_keys(pk: PermKeys) -> np.ndarray:
    n = pk.keys.size
    if not uses_counting_sort(n, pk.K):
        return np.argsort(pk.keys, kind="stable")
    order = np.empty(n, np.int64)
    _bucket_sort(pk.keys, pk.buckets, pk.K, order, np.empty(pk.K + 3, np.int64))
    return order


def weighted_permutation(wt, stream: RngStream, workers: int = 1, check: bool = False) -> np.ndarray:
    """All items ordered by exponential keys; block ``b`` of the uniforms
    comes from ``stream.child(b)``."""
    wt = as_table(wt)
    if wt.n == 1:
        return np.zeros(1, np.int64)
    order = order_from_keys(permutation_keys(wt, stream, workers))
    if check:
        seen = np.zeros(wt.n, bool)
        seen[order] = True
        assert seen.all() and order.size == wt.n, "output is not a permutation"
    return order


@dataclass
class OccupancyStats:
    mean: float  # mean over items of other items sharing their bucket
    peak: float  # largest mean over 64 equal slots of [0, K)
    max: int  # most items seen in any in-range bucket
    clamped: float  # mean clamped items per permutation
    nonempty: float  # mean number of nonempty buckets
    sd: float  # standard error of ``mean`` from the per-trial means
    trials: int


def bucket_occupancy_audit(wt, trials: int, stream: RngStream) -> OccupancyStats:
    """Occupancy of in-range buckets over ``trials`` independent key draws.

    For an item in bucket ``b`` the occupancy is the number of other items
    that landed in ``b``.  ``peak`` splits ``[0, K)`` into 64 equal slots and
    reports the largest per-slot mean among well-populated slots.
    """
    wt = as_table(wt)
    n = wt.n
    total = 0.0
    count = 0
    mx = 0
    clamped = 0
    nonempty = 0
    slots = 64
    slot_sum = np.zeros(slots)
    slot_cnt = np.zeros(slots)
    per_trial = []
    for t in range(trials):
        pk = permutation_keys(wt, stream.child(t))
        inr = (pk.buckets >= 0) & (pk.buckets < max(pk.K, 1)) if n > 1 else np.ones(1, bool)
        clamped += pk.clamped
        b = pk.buckets[inr]
        if b.size == 0:
            continue
        uniq, inv, cnt = np.unique(b, return_inverse=True, return_counts=True)
        occ = cnt[inv] - 1
        total += occ.sum()
        count += occ.size
        per_trial.append(occ.mean())
        mx = max(mx, int(cnt.max()))
        nonempty += uniq.size + int((~inr).any())
        s = np.minimum((b * slots) // max(pk.K, 1), slots - 1)
        np.add.at(slot_sum, s, occ)
        np.add.at(slot_cnt, s, 1)
    busy = slot_cnt >= max(1, slot_cnt.sum() / (4 * slots))
    peak = float(np.max(slot_sum[busy] / slot_cnt[busy])) if busy.any() else 0.0
    sd = float(np.std(per_trial, ddof=1) / math.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
    return OccupancyStats(total / max(count, 1), peak, mx, clamped / trials, nonempty / trials, sd, trials)


@numba.njit(cache=True, nogil=True)
def _repeated(w, w_max, K, counting, trials, gen, out):
    n = w.size
    r = np.empty(n)
    e = np.empty(n)
    bucket = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    counts = np.empty(K + 3, np.int64)
    for t in range(trials):
        for i in range(n):
            u = gen.random()
            while u == 0.0:
                u = gen.random()
            r[i] = u
        _keys(r, w, w_max, K, e, bucket)
        if counting:
            _bucket_sort(e, bucket, K, order, counts)
        else:
            order[:] = np.argsort(e, kind="mergesort")
        out[t, :] = order


def weighted_permutation_repeated(wt, trials: int, stream: RngStream) -> np.ndarray:
    """``trials x n`` permutations drawn on a single generator."""
    wt = as_table(wt)
    n = wt.n
    out = np.zeros((trials, n), np.int64)
    if n == 1:
        return out
    K = key_range(n, wt.ratio)
    _repeated(wt.weights, wt.w_max, K, uses_counting_sort(n, K), trials, stream.gen, out)
    return out
