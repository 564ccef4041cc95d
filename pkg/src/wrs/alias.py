"""Alias tables: Vose, sweeping and parallel-splitting (PSA) construction.

A table stores one 16-byte record per bucket, ``(share, item, alias)``.
Bucket ``r`` represents weight ``W/n``: ``share`` of it belongs to ``item``
and the rest to ``alias``.  A query picks a bucket uniformly, draws
``x = U * W/n`` and returns ``[item, alias][x >= share]``.

Items are 0-based.  Ties ``w == W/n`` count as light in every builder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    BLOCK,
    RngStream,
    WeightTable,
    _uniform_index,
    as_table,
    block_ranges,
    compensated_prefix,
    parallel_map,
)

BUCKET = np.dtype([("share", "<f8"), ("item", "<i4"), ("alias", "<i4")], align=True)
assert BUCKET.itemsize == 16


@dataclass
class AliasTable:
    buckets: np.ndarray
    total: float

    @property
    def n(self) -> int:
        return self.buckets.size

    @property
    def bucket_weight(self) -> float:
        return self.total / self.n

    @property
    def share(self) -> np.ndarray:
        return self.buckets["share"]

    @property
    def item(self) -> np.ndarray:
        return self.buckets["item"]

    @property
    def alias(self) -> np.ndarray:
        return self.buckets["alias"]

    def id_pairs(self) -> np.ndarray:
        """``(n, 2)`` int32 view of the ``[item, alias]`` pair per bucket."""
        return self.buckets.view(np.int32).reshape(self.n, 4)[:, 2:4]


def empty_buckets(n: int) -> np.ndarray:
    return np.zeros(n, dtype=BUCKET)


# --- sequential builders -----------------------------------------------------

@numba.njit(cache=True, nogil=True, inline="always")
def _acc(hi, lo, x):
    """``(hi, lo) + x`` kept as an unevaluated pair (TwoSum).

    Heavy residuals pass through many subtractions; without this the
    accumulated rounding of a huge item lands on whichever item is
    finished last.
    """
    s = hi + x
    bp = s - hi
    lo += (hi - (s - bp)) + (x - bp)
    t = s + lo
    return t, lo - (t - s)


@numba.njit(cache=True, nogil=True)
def _vose_into(w, total, share, item, alias, base):
    n = w.size
    thr = total / n
    heavy = np.empty(n, np.int64)
    light = np.empty(n, np.int64)
    nh = 0
    nl = 0
    for i in range(n):
        share[i] = w[i]
        item[i] = base + i
        alias[i] = base + i
        if w[i] > thr:
            heavy[nh] = i
            nh += 1
        else:
            light[nl] = i
            nl += 1
    while nh > 0:
        nh -= 1
        j = heavy[nh]
        hi, lo = share[j], 0.0
        while hi > thr:
            if nl == 0:
                # rounding drift left a sliver above W/n
                hi = thr
                break
            nl -= 1
            i = light[nl]
            alias[i] = base + j
            hi, lo = _acc(hi, lo, share[i])
            hi, lo = _acc(hi, lo, -thr)
        share[j] = max(hi, 0.0)
        light[nl] = j
        nl += 1


@numba.njit(cache=True, nogil=True)
def _next_light(w, thr, k):
    n = w.size
    while k < n and w[k] > thr:
        k += 1
    return k


@numba.njit(cache=True, nogil=True)
def _next_heavy(w, thr, k):
    n = w.size
    while k < n and w[k] <= thr:
        k += 1
    return k


@numba.njit(cache=True, nogil=True)
def _sweep_into(w, total, share, item, alias, base):
    n = w.size
    thr = total / n
    for k in range(n):
        share[k] = w[k]
        item[k] = base + k
        alias[k] = base + k
    i = _next_light(w, thr, 0)
    j = _next_heavy(w, thr, 0)
    if j >= n:
        return
    r, rl = w[j], 0.0
    drift = False
    while j < n:
        if r > thr:
            if i >= n:
                drift = True
                break
            # light bucket i keeps share w[i]; heavy j fills the rest
            alias[i] = base + j
            r, rl = _acc(r, rl, w[i])
            r, rl = _acc(r, rl, -thr)
            i = _next_light(w, thr, i + 1)
        else:
            share[j] = max(r, 0.0)
            jn = _next_heavy(w, thr, j + 1)
            if jn >= n:
                break
            alias[j] = base + jn
            r, rl = _acc(r, 0.0, w[jn])
            r, rl = _acc(r, rl, -thr)
            j = jn
    if drift:
        for k in range(j, n):
            if share[k] > thr:
                share[k] = thr


def _build_sequential(kernel, wt) -> AliasTable:
    wt = as_table(wt)
    b = empty_buckets(wt.n)
    kernel(wt.weights, wt.total, b["share"], b["item"], b["alias"], 0)
    return AliasTable(b, wt.total)


def build_vose(wt) -> AliasTable:
    """Classic two-stack construction."""
    return _build_sequential(_vose_into, wt)


def build_sweep(wt) -> AliasTable:
    """Two-index sweep over the input; no auxiliary arrays."""
    return _build_sequential(_sweep_into, wt)


# --- parallel splitting ------------------------------------------------------

@dataclass(frozen=True)
class Split:
    light: int  # light items l[:light] belong left
    heavy: int  # heavy buckets h[:heavy] are packed left
    spill: float  # residual of h[heavy] handed to the right


def psa_split(n_left: int, light_prefix: np.ndarray, heavy_prefix: np.ndarray, thr: float) -> Split:
    """Split so ``i + j = n_left`` and ``sigma <= n_left*thr < sigma + w(h[j])``.

    ``sigma(j) = L[n_left - j] + H[j]`` grows with ``j`` (a heavy replaces a
    light), so the largest feasible ``j`` also satisfies the right-hand
    inequality.
    """
    nl = light_prefix.size - 1
    nh = heavy_prefix.size - 1
    target = n_left * thr
    lo = max(0, n_left - nl)
    hi = min(n_left, nh)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if light_prefix[n_left - mid] + heavy_prefix[mid] <= target:
            lo = mid
        else:
            hi = mid - 1
    j = lo
    sigma = light_prefix[n_left - j] + heavy_prefix[j]
    if j < nh:
        spill = (heavy_prefix[j + 1] - heavy_prefix[j]) + sigma - target
    else:
        spill = 0.0
    return Split(n_left - j, j, float(spill))


@numba.njit(cache=True, nogil=True)
def _pack(w, light, heavy, thr, i, i_end, j, j_end, r, share, alias, writes, writer, pe):
    nh = heavy.size
    rl = 0.0
    while True:
        if j < j_end and (r <= thr or i >= i_end):
            b = heavy[j]
            share[b] = min(max(r, 0.0), thr)
            if j + 1 < nh:
                alias[b] = heavy[j + 1]
                r, rl = _acc(r, 0.0, w[heavy[j + 1]])
                r, rl = _acc(r, rl, -thr)
            else:
                alias[b] = b
                r, rl = -np.inf, 0.0
            j += 1
        elif i < i_end:
            b = light[i]
            share[b] = w[b]
            alias[b] = heavy[j] if j < nh else b
            r, rl = _acc(r, rl, w[b])
            r, rl = _acc(r, rl, -thr)
            i += 1
        else:
            return
        if writes.size:
            writes[b] += 1
            writer[b] = pe


@numba.njit(cache=True, nogil=True)
def _init_range(w, share, item, alias, lo, hi):
    for k in range(lo, hi):
        share[k] = w[k]
        item[k] = k
        alias[k] = k


@dataclass
class PsaTrace:
    """Debug record of a PSA build: splits and per-bucket write counts."""

    splits: list
    writes: np.ndarray
    writer: np.ndarray
    light: np.ndarray
    heavy: np.ndarray


def build_psa(wt, workers: int = 1, debug: bool = False):
    """Parallel splitting construction with ``workers`` subproblems.

    With ``debug=True`` returns ``(table, PsaTrace)``.
    """
    wt = as_table(wt)
    workers = max(1, int(workers))
    w = wt.weights
    n = wt.n
    thr = wt.total / n
    b = empty_buckets(n)
    share, item, alias = b["share"], b["item"], b["alias"]

    is_heavy = w > thr
    heavy = np.flatnonzero(is_heavy)
    light = np.flatnonzero(~is_heavy)
    parallel_map(lambda r: _init_range(w, share, item, alias, r[0], r[1]), block_ranges(n, BLOCK), workers)

    if debug:
        writes = np.zeros(n, np.int64)
        writer = np.full(n, -1, np.int64)
    else:
        writes = writer = np.zeros(0, np.int64)

    splits: list[Split] = []
    if heavy.size:
        lp = compensated_prefix(w[light])
        hp = compensated_prefix(w[heavy])
        cuts = [-(-n * k // workers) for k in range(1, workers)]
        splits = parallel_map(lambda c: psa_split(c, lp, hp, thr), cuts, workers)
        bounds = [Split(0, 0, float(w[heavy[0]]))] + splits + [Split(light.size, heavy.size, 0.0)]

        def pack(k):
            s, e = bounds[k], bounds[k + 1]
            _pack(w, light, heavy, thr, s.light, e.light, s.heavy, e.heavy, s.spill,
                  share, alias, writes, writer, k)

        parallel_map(pack, range(workers), workers)

    table = AliasTable(b, wt.total)
    if debug:
        return table, PsaTrace(splits, writes, writer, light, heavy)
    return table


BUILDERS = {"vose": build_vose, "sweep": build_sweep}


# --- queries -----------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _draw_into(share, ids, thr, gen, out):
    n = share.size
    for t in range(out.size):
        r = _uniform_index(n, gen)
        x = gen.random() * thr
        out[t] = ids[r, np.int64(x >= share[r])]


def sample(t: AliasTable, stream: RngStream) -> int:
    n = t.n
    r = int(stream.gen.random() * n)
    while r >= n:
        r = int(stream.gen.random() * n)
    x = stream.gen.random() * t.bucket_weight
    rec = t.buckets[r]
    return int(rec["alias"] if x >= rec["share"] else rec["item"])


def sample_many(t: AliasTable, k: int, stream: RngStream, workers: int = 1) -> np.ndarray:
    """``k`` independent draws.

    Output block ``b`` (of ``BLOCK`` draws) always comes from
    ``stream.child(b)``, so the result does not depend on ``workers``.
    """
    out = np.empty(k, np.int64)
    if k == 0:
        return out
    share, ids, thr = t.share, t.id_pairs(), t.bucket_weight

    def run(bi):
        lo, hi = bi * BLOCK, min(k, (bi + 1) * BLOCK)
        _draw_into(share, ids, thr, stream.child(bi).gen, out[lo:hi])

    parallel_map(run, range(math.ceil(k / BLOCK)), workers)
    return out
