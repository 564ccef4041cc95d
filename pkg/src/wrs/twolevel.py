"""Two-level alias table: a meta table over contiguous groups of items.

Every group gets its own local alias table.  The local tables live in
consecutive slices of one shared bucket array and store global item ids, so
a query is a meta draw followed by a local draw with no id translation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .alias import AliasTable, _sweep_into, _vose_into, build_sweep, build_vose, empty_buckets
from .core import BLOCK, RngStream, _uniform_index, as_table, compensated_sum, parallel_map, split_ranges

BASES = ("vose", "sweep")


@dataclass
class TwoLevelTable:
    meta: AliasTable
    locals: AliasTable  # concatenated local tables, global ids
    offsets: np.ndarray  # group g owns buckets offsets[g]:offsets[g+1]
    group_weights: np.ndarray
    total: float

    @property
    def group_count(self) -> int:
        return self.offsets.size - 1

    @property
    def n(self) -> int:
        return int(self.offsets[-1])

    def local(self, g: int) -> AliasTable:
        lo, hi = int(self.offsets[g]), int(self.offsets[g + 1])
        return AliasTable(self.locals.buckets[lo:hi], float(self.group_weights[g]))

    def local_thresholds(self) -> np.ndarray:
        return self.group_weights / np.diff(self.offsets)


def build_two_level(wt, groups: int | None = None, base: str = "sweep", workers: int = 1) -> TwoLevelTable:
    """Build locals in parallel (one task per group), then the meta table."""
    wt = as_table(wt)
    n = wt.n
    groups = min(max(1, int(workers)), n) if groups is None else int(groups)
    if not 1 <= groups <= n:
        raise ValueError(f"groups must be in [1, {n}], got {groups}")
    if base not in BASES:
        raise ValueError(f"unknown base algorithm {base!r}")
    size = math.ceil(n / groups)
    count = math.ceil(n / size)
    offsets = np.minimum(np.arange(count + 1, dtype=np.int64) * size, n)

    w = wt.weights
    b = empty_buckets(n)
    share, item, alias = b["share"], b["item"], b["alias"]
    gw = np.empty(count)

    use_vose = base == "vose"

    def build_locals(r):
        _build_groups(w, offsets, r[0], r[1], use_vose, share, item, alias, gw)

    parallel_map(build_locals, split_ranges(count, max(1, int(workers))), workers)
    meta = (build_vose if base == "vose" else build_sweep)(gw)
    return TwoLevelTable(meta, AliasTable(b, wt.total), offsets, gw, wt.total)


@numba.njit(cache=True, nogil=True)
def _build_groups(w, offsets, g0, g1, use_vose, share, item, alias, gw):
    for g in range(g0, g1):
        lo = offsets[g]
        hi = offsets[g + 1]
        gw[g] = compensated_sum(w[lo:hi])
        if use_vose:
            _vose_into(w[lo:hi], gw[g], share[lo:hi], item[lo:hi], alias[lo:hi], lo)
        else:
            _sweep_into(w[lo:hi], gw[g], share[lo:hi], item[lo:hi], alias[lo:hi], lo)


@numba.njit(cache=True, nogil=True)
def _draw_two_level(mshare, mids, mthr, share, ids, offsets, thr, gen, out):
    p = mshare.size
    for t in range(out.size):
        r = _uniform_index(p, gen)
        g = mids[r, np.int64(gen.random() * mthr >= mshare[r])]
        lo = offsets[g]
        r = lo + _uniform_index(offsets[g + 1] - lo, gen)
        out[t] = ids[r, np.int64(gen.random() * thr[g] >= share[r])]


def _args(t: TwoLevelTable):
    return (t.meta.share, t.meta.id_pairs(), t.meta.bucket_weight,
            t.locals.share, t.locals.id_pairs(), t.offsets, t.local_thresholds())


def sample_two_level(t: TwoLevelTable, stream: RngStream) -> int:
    out = np.empty(1, np.int64)
    _draw_two_level(*_args(t), stream.gen, out)
    return int(out[0])


def sample_two_level_many(t: TwoLevelTable, k: int, stream: RngStream, workers: int = 1) -> np.ndarray:
    """``k`` draws; block ``b`` of the output uses ``stream.child(b)``."""
    out = np.empty(k, np.int64)
    args = _args(t)

    def run(bi):
        lo, hi = bi * BLOCK, min(k, (bi + 1) * BLOCK)
        _draw_two_level(*args, stream.child(bi).gen, out[lo:hi])

    parallel_map(run, range(math.ceil(k / BLOCK)), workers)
    return out
