"""Output-sensitive sampling with replacement.

Items are grouped by ``g = floor(log2(w / w_min))`` so group ``g`` holds
weights in ``[a, 2a)`` with ``a = w_min * 2**g``.  Within a group every item
sits in its own bucket of capacity ``2a``; a rejection draw over a range of
buckets accepts with probability at least one half.

A query splits ``k`` binomially down a divide-and-conquer tree over the
nonempty groups, then down a tree over each group's items.  Subtrees that
receive no samples are never visited, so the work tracks the number of
distinct items in the output rather than ``n``.

A node stops splitting once it needs fewer than ``BASE_CASE_MAX`` samples
from at least half as many items; those samples are drawn directly by
rejection over the node's range and, with dedup on, merged after sorting.

Trees are implicit heaps (node 1 is the root, leaves padded to a power of
two with zero weight).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numba
import numpy as np

from .core import RngStream, SampleWithMultiplicity, _bsplit, as_table, parallel_map

BASE_CASE_MAX = 128


def group_index(w: np.ndarray, w_min: float) -> np.ndarray:
    """Exact ``floor(log2(w / w_min))`` for ``w >= w_min``."""
    w = np.asarray(w, dtype=np.float64)
    _, e = np.frexp(w / w_min)
    g = (e - 1).astype(np.int64)
    # the division may round across a power of two; fix with exact scaling
    g -= np.ldexp(w_min, g) > w
    g += np.ldexp(w_min, g + 1) <= w
    return g


@numba.njit(cache=True, nogil=True)
def _counting_sort(keys, nkeys):
    counts = np.zeros(nkeys + 1, np.int64)
    for k in keys:
        counts[k + 1] += 1
    for g in range(nkeys):
        counts[g + 1] += counts[g]
    start = counts.copy()
    order = np.empty(keys.size, np.int64)
    for i in range(keys.size):
        k = keys[i]
        order[start[k]] = i
        start[k] += 1
    return order, counts


def _pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


@numba.njit(cache=True, nogil=True)
def _fill_heap(tree, off, leaves, p):
    for i in range(p):
        tree[off + p + i] = leaves[i] if i < leaves.size else 0.0
    for v in range(p - 1, 0, -1):
        tree[off + v] = tree[off + 2 * v] + tree[off + 2 * v + 1]


@dataclass
class GroupedSampler:
    weights: np.ndarray
    total: float
    w_min: float
    order: np.ndarray  # item ids sorted by group (stable)
    sorted_w: np.ndarray  # weights in that order
    group_start: np.ndarray  # group g occupies order[group_start[g]:group_start[g+1]]
    cap: np.ndarray  # bucket capacity 2a per group
    tree: np.ndarray  # concatenated per-group heaps
    tree_off: np.ndarray
    tree_leaves: np.ndarray  # padded leaf count per group
    top: np.ndarray  # heap over nonempty groups
    top_leaves: int
    top_groups: np.ndarray  # group id per top leaf, -1 for padding

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def group_count(self) -> int:
        return self.group_start.size - 1

    def group_sizes(self) -> np.ndarray:
        return np.diff(self.group_start)

    def group_weights(self) -> np.ndarray:
        out = np.zeros(self.group_count)
        nz = self.group_sizes() > 0
        out[nz] = self.tree[self.tree_off[nz] + 1]
        return out

    def aggregates(self):
        """``(g, h, c)``: relative group weights, their inclusive prefix sums
        and inclusive prefix item counts, over groups in increasing weight."""
        cached = self.__dict__.get("_aggregates")
        if cached is None:
            gw = self.group_weights() / self.total
            cached = self._aggregates = (gw, np.cumsum(gw), np.cumsum(self.group_sizes()))
        return cached

    def top_internal(self) -> np.ndarray:
        return self.top[1:self.top_leaves]

    def audit(self, rel: float = 1e-12) -> bool:
        """Check every interior node equals the sum of its children."""
        trees = [(self.top, 0, self.top_leaves)]
        trees += [(self.tree, int(o), int(p)) for o, p in zip(self.tree_off, self.tree_leaves) if p]
        for tree, off, p in trees:
            v = np.arange(1, p)
            parent = tree[off + v]
            kids = tree[off + 2 * v] + tree[off + 2 * v + 1]
            if np.any(np.abs(parent - kids) > rel * np.maximum(parent, 1e-300)):
                return False
        return True

    def _kernel_args(self):
        return (self.order, self.sorted_w, self.group_start, self.cap, self.tree, self.tree_off,
                self.tree_leaves, self.top, self.top_leaves, self.top_groups)


def build_grouped(wt, workers: int = 1) -> GroupedSampler:
    wt = as_table(wt)
    w = wt.weights
    g = group_index(w, wt.w_min)
    ngroups = int(g.max()) + 1
    order, start = _counting_sort(g, ngroups)
    sorted_w = w[order]
    sizes = np.diff(start)
    leaves = np.array([_pow2(s) if s else 0 for s in sizes], np.int64)
    tree_off = np.concatenate(([0], np.cumsum(2 * leaves)[:-1])).astype(np.int64)
    tree = np.zeros(int(2 * leaves.sum()))

    def build(gi):
        if sizes[gi]:
            _fill_heap(tree, tree_off[gi], sorted_w[start[gi]:start[gi + 1]], leaves[gi])

    parallel_map(build, range(ngroups), workers)

    nonempty = np.flatnonzero(sizes)
    pt = _pow2(nonempty.size)
    top = np.zeros(2 * pt)
    gw = np.array([tree[tree_off[gi] + 1] for gi in nonempty])
    _fill_heap(top, 0, gw, pt)
    top_groups = np.full(pt, -1, np.int64)
    top_groups[:nonempty.size] = nonempty
    cap = np.ldexp(wt.w_min, np.arange(ngroups) + 1)
    return GroupedSampler(w, wt.total, wt.w_min, order, sorted_w, start, cap, tree, tree_off,
                          leaves, top, pt, top_groups)


# --- descent kernels ---------------------------------------------------------

@numba.njit(cache=True, nogil=True, inline="always")
def _reject(sw, lo, cnt, cap, gen):
    # one uniform gives both the index and the acceptance variate
    while True:
        x = gen.random() * cnt
        r = int(x)
        if r < cnt and (x - r) * cap < sw[lo + r]:
            return lo + r


@numba.njit(cache=True, nogil=True, inline="always")
def _insertion_sort(a, n):
    for i in range(1, n):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x


@numba.njit(cache=True, nogil=True, inline="always")
def _scratch(max_leaves, groups):
    """Descent stack (group, node, offset, width, count) and base-case draws."""
    depth = groups + 2 * (int(np.log2(max(max_leaves, 1))) + 2)
    return (np.empty(depth, np.int64), np.empty(depth, np.int64), np.empty(depth, np.int64),
            np.empty(depth, np.int64), np.empty(depth, np.int64), np.empty(BASE_CASE_MAX, np.int64))


@numba.njit(cache=True, nogil=True, inline="always")
def _descend(order, sw, start, cap, tree, tree_off, tree_leaves, mg, gen, dedup, items, counts,
             sg, sn, sl, swd, sm, hits):
    """Descend every group ``g`` with ``mg[g] > 0`` in increasing ``g``.

    One stack serves all groups so no call is made per group.  Writes at most
    ``sum(mg)`` pairs; returns output size and visited nodes.
    """
    pos = 0
    visited = 0
    top = 0
    for g in range(mg.size - 1, -1, -1):
        if mg[g] > 0:
            sg[top] = g
            sn[top] = 1
            sl[top] = 0
            swd[top] = tree_leaves[g]
            sm[top] = mg[g]
            top += 1
    while top > 0:
        top -= 1
        g = sg[top]
        node = sn[top]
        lo = sl[top]
        width = swd[top]
        mm = sm[top]
        visited += 1
        lo_item = start[g]
        cnt = min(lo + width, start[g + 1] - lo_item) - lo
        if cnt == 1:
            items[pos] = order[lo_item + lo]
            counts[pos] = mm
            pos += 1
        elif mm == 1:
            j = _reject(sw, lo_item + lo, cnt, cap[g], gen)
            items[pos] = order[j]
            counts[pos] = 1
            pos += 1
        elif mm < BASE_CASE_MAX and 2 * cnt >= mm:
            if dedup:
                for q in range(mm):
                    hits[q] = _reject(sw, lo_item + lo, cnt, cap[g], gen)
                _insertion_sort(hits, mm)
                q = 0
                while q < mm:
                    r = q + 1
                    while r < mm and hits[r] == hits[q]:
                        r += 1
                    items[pos] = order[hits[q]]
                    counts[pos] = r - q
                    pos += 1
                    q = r
            else:
                for _ in range(mm):
                    j = _reject(sw, lo_item + lo, cnt, cap[g], gen)
                    items[pos] = order[j]
                    counts[pos] = 1
                    pos += 1
        else:
            half = width // 2
            left = 2 * node
            off = tree_off[g]
            ml = _bsplit(mm, tree[off + left], tree[off + left + 1], gen)
            if mm - ml > 0:
                sg[top] = g
                sn[top] = left + 1
                sl[top] = lo + half
                swd[top] = half
                sm[top] = mm - ml
                top += 1
            if ml > 0:
                sg[top] = g
                sn[top] = left
                sl[top] = lo
                swd[top] = half
                sm[top] = ml
                top += 1
    return pos, visited


@numba.njit(cache=True, nogil=True, inline="always")
def _top_descent(top, pt, top_groups, k, gen, mg, sn, sm):
    """Split ``k`` over the groups into ``mg``; returns visited nodes."""
    visited = 0
    sn[0] = 1
    sm[0] = k
    sp = 1
    while sp > 0:
        sp -= 1
        node = sn[sp]
        m = sm[sp]
        visited += 1
        if node >= pt:
            mg[top_groups[node - pt]] += m
            continue
        left = 2 * node
        ml = _bsplit(m, top[left], top[left + 1], gen)
        if m - ml > 0:
            sn[sp] = left + 1
            sm[sp] = m - ml
            sp += 1
        if ml > 0:
            sn[sp] = left
            sm[sp] = ml
            sp += 1
    return visited


@numba.njit(cache=True, nogil=True)
def _buffers(tree_leaves, pt):
    sg, sn, sl, swd, sm, hits = _scratch(max(pt, tree_leaves.max()), tree_leaves.size)
    return np.zeros(tree_leaves.size, np.int64), sg, sn, sl, swd, sm, hits


@numba.njit(cache=True, nogil=True, inline="always")
def _sample_all(order, sw, start, cap, tree, tree_off, tree_leaves, top, pt, top_groups,
                k, gen, dedup, items, counts, mg, sg, sn, sl, swd, sm, hits):
    """Whole query on a single generator; returns output size and visited.

    ``items`` and ``counts`` must hold ``k`` entries; ``mg``, the stacks and
    ``hits`` come from ``_buffers``.
    """
    for g in range(mg.size):
        mg[g] = 0
    visited = 0
    if k > 0:
        visited = _top_descent(top, pt, top_groups, k, gen, mg, sn, sm)
    pos, v = _descend(order, sw, start, cap, tree, tree_off, tree_leaves, mg, gen, dedup, items, counts,
                      sg, sn, sl, swd, sm, hits)
    return pos, visited + v


@numba.njit(cache=True, nogil=True)
def _repeated_dense(order, sw, start, cap, tree, tree_off, tree_leaves, top, pt, top_groups,
                    k, trials, gen, dedup, n, mat, distinct):
    items = np.empty(k, np.int64)
    counts = np.empty(k, np.int64)
    mg, sg, sn, sl, swd, sm, hits = _buffers(tree_leaves, pt)
    for t in range(trials):
        pos, _ = _sample_all(order, sw, start, cap, tree, tree_off, tree_leaves, top,
                             pt, top_groups, k, gen, dedup, items, counts,
                             mg, sg, sn, sl, swd, sm, hits)
        distinct[t] = pos
        if mat.shape[0] > 0:
            for q in range(pos):
                mat[t, items[q]] += counts[q]


# --- public API --------------------------------------------------------------

class Multiset:
    """Sample with replacement as parallel ``items`` / ``counts`` arrays."""

    __slots__ = ("items", "counts", "visited")

    def __init__(self, items: np.ndarray, counts: np.ndarray, visited: int = 0):
        self.items = items
        self.counts = counts
        self.visited = visited

    def __iter__(self) -> Iterator[SampleWithMultiplicity]:
        for i, c in zip(self.items.tolist(), self.counts.tolist()):
            yield SampleWithMultiplicity(i, c)

    def __len__(self) -> int:
        return self.items.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merged(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, c in zip(self.items.tolist(), self.counts.tolist()):
            out[i] = out.get(i, 0) + c
        return out

    def dense(self, n: int) -> np.ndarray:
        return np.bincount(self.items, weights=self.counts, minlength=n).astype(np.int64)

    def __repr__(self) -> str:
        return f"Multiset({list(self)!r})"


def descend_group(gs: GroupedSampler, group: int, m: int, stream: RngStream, dedup: bool = True) -> Multiset:
    """Draw ``m`` samples restricted to one group."""
    if m <= 0:
        return Multiset(np.empty(0, np.int64), np.empty(0, np.int64))
    s, e = int(gs.group_start[group]), int(gs.group_start[group + 1])
    if s == e:
        raise ValueError(f"group {group} is empty")
    items = np.empty(m, np.int64)
    counts = np.empty(m, np.int64)
    mg, *stacks = _buffers(gs.tree_leaves, gs.top_leaves)
    mg[group] = m
    pos, visited = _descend(gs.order, gs.sorted_w, gs.group_start, gs.cap, gs.tree, gs.tree_off,
                            gs.tree_leaves, mg, stream.gen, dedup, items, counts, *stacks)
    return Multiset(items[:pos].copy(), counts[:pos].copy(), visited)


def sample_replacement(gs: GroupedSampler, k: int, stream: RngStream, dedup: bool = True,
                       workers: int = 1) -> Multiset:
    """``k`` draws with replacement as (item, multiplicity) pairs.

    The group split runs on ``stream``; group ``g`` then descends on
    ``stream.child(g + 1)``, so the output does not depend on ``workers``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    mg = np.zeros(gs.group_count, np.int64)
    _, sn, _, _, sm, _ = _scratch(gs.top_leaves, 0)
    visited = _top_descent(gs.top, gs.top_leaves, gs.top_groups, k, stream.gen, mg, sn, sm) if k else 0
    active = np.flatnonzero(mg)
    parts = parallel_map(lambda g: descend_group(gs, int(g), int(mg[g]), stream.child(int(g) + 1), dedup),
                         list(active), workers)
    if parts:
        items = np.concatenate([p.items for p in parts])
        counts = np.concatenate([p.counts for p in parts])
    else:
        items = counts = np.empty(0, np.int64)
    out = Multiset(items, counts, visited + sum(p.visited for p in parts))
    assert out.total == k, "multiplicities must sum to k"
    return out


def sample_replacement_sequential(gs: GroupedSampler, k: int, stream: RngStream, dedup: bool = True) -> Multiset:
    """Single-generator query (no child streams); also reports visited nodes."""
    items = np.empty(k, np.int64)
    counts = np.empty(k, np.int64)
    pos, visited = _sample_all(*gs._kernel_args(), k, stream.gen, dedup, items, counts,
                               *_buffers(gs.tree_leaves, gs.top_leaves))
    out = Multiset(items[:pos].copy(), counts[:pos].copy(), visited)
    assert out.total == k
    return out


def sample_replacement_repeated(gs: GroupedSampler, k: int, trials: int, stream: RngStream,
                                dedup: bool = True, dense: bool = True):
    """Run ``trials`` independent queries.

    Returns ``(counts, distinct)``: a ``trials x n`` multiplicity matrix (empty
    when ``dense`` is false) and the number of output pairs per trial.
    """
    mat = np.zeros((trials if dense else 0, gs.n), np.int64)
    distinct = np.zeros(trials, np.int64)
    _repeated_dense(*gs._kernel_args(), k, trials, stream.gen, dedup, gs.n, mat, distinct)
    return mat, distinct
