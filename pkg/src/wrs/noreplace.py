"""Weighted sampling without replacement by oversampling with replacement.

``choose_ell`` picks an oversample size ``ell`` whose estimated number of
distinct items ``t_ell`` is at least ``2k``.  The estimate works on weight
groups: with weights normalized to total 1 and ``a_g`` the lower end of group
``g``, the group is light for ``ell <= ceil(1 / (2 a_g))``.  Light groups
contribute ``ell * weight`` and heavy groups their item count, so
``t_ell = ell * h_i + (n - c_i)`` where ``i`` is the last light group.

A query draws ``ell`` samples with replacement.  If they contain fewer than
``k`` distinct items, another batch of ``ell`` draws is appended.  Items are
then ranked by the batch they first appear in and, inside a batch, by an
exponential key with rate equal to their multiplicity.  That ranking has the
same law as first-occurrence order in the underlying i.i.d. sequence, so the
``k`` smallest ranks are exactly the first ``k`` distinct draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import RngStream, _exp_key, exponential_keys
from .outsens import GroupedSampler, _buffers, _sample_all, sample_replacement

ELL_LIMIT = 1 << 40


@dataclass(frozen=True)
class EllEstimate:
    ell: int
    t: float


@dataclass
class NoReplacementInfo:
    ell: int
    t: float
    batches: int

    @property
    def rejected(self) -> bool:
        return self.batches > 1


def _boundaries(gs: GroupedSampler) -> np.ndarray:
    """``ceil(1 / (2 a_g))`` for every group, with ``a_g`` normalized."""
    a = np.ldexp(gs.w_min, np.arange(gs.group_count)) / gs.total
    return np.ceil(1.0 / (2.0 * a))


def estimate_t(gs: GroupedSampler, ell: int) -> float:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    _, h, c = gs.aggregates()
    b = _boundaries(gs)
    light = np.flatnonzero(b >= ell)
    if light.size == 0:
        return float(gs.n)
    i = light[-1]
    return float(ell * h[i] + (gs.n - c[i]))


def t_exact(weights, ell: int) -> float:
    """Item-level estimate: ``ell`` times the normalized weight of items
    below ``1/ell`` plus the number of items at or above it."""
    p = np.asarray(weights, dtype=np.float64)
    p = p / p.sum()
    light = p < 1.0 / ell
    return float(ell * p[light].sum() + np.count_nonzero(~light))


def expected_unique(weights, ell: int) -> float:
    """Exact expected number of distinct items in ``ell`` draws."""
    p = np.asarray(weights, dtype=np.float64)
    p = p / p.sum()
    return float(np.sum(-np.expm1(ell * np.log1p(-p))))


def _intervals(gs: GroupedSampler):
    """Yield ``(lo, hi, slope, offset)`` in increasing ``ell``.

    On ``lo <= ell <= hi`` the estimate is ``slope * ell + offset``.
    """
    _, h, c = gs.aggregates()
    b = _boundaries(gs)
    G = b.size
    n = gs.n
    for i in range(G - 1, -2, -1):
        lo = 1.0 if i == G - 1 else b[i + 1] + 1.0
        hi = math.inf if i < 0 else b[i]
        if lo > hi:
            continue
        if i < 0:
            yield lo, hi, 0.0, float(n)
        else:
            yield lo, hi, float(h[i]), float(n - c[i])


def max_t(gs: GroupedSampler) -> float:
    best = float(gs.n)
    for lo, hi, slope, off in _intervals(gs):
        if math.isfinite(hi):
            best = max(best, slope * hi + off)
    return best


def choose_ell(gs: GroupedSampler, k: int) -> EllEstimate:
    """Smallest ``ell >= k`` with ``t_ell >= min(2k, max t)``.

    ``t`` is linear inside each interval between group boundaries, so the
    first feasible ``ell`` of an interval is found by solving the linear
    equation.
    """
    n = gs.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    target = min(2.0 * k, max_t(gs))
    for lo, hi, slope, off in _intervals(gs):
        lo = max(lo, float(k))
        if lo > hi:
            continue
        if slope * lo + off >= target:
            ell = lo
        elif slope > 0:
            ell = max(lo, math.ceil((target - off) / slope))
            while slope * ell + off < target:
                ell += 1
            if ell > hi:
                continue
        else:
            continue
        if ell > ELL_LIMIT:
            break
        ell = int(ell)
        return EllEstimate(ell, slope * ell + off)
    raise ValueError(f"oversample size for k={k} exceeds {ELL_LIMIT}; weights are too skewed")


def sample_no_replacement(gs: GroupedSampler, k: int, stream: RngStream, workers: int = 1,
                          return_info: bool = False):
    """``k`` distinct items in draw order.

    Batch ``b`` draws on ``stream.child(2b)`` and its keys on
    ``stream.child(2b + 1)``.
    """
    n = gs.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == n:
        keys = exponential_keys(gs.weights, stream)
        out = np.argsort(keys, kind="stable")
        info = NoReplacementInfo(0, float(n), 0)
        return (out, info) if return_info else out

    est = choose_ell(gs, k)
    seen = np.zeros(n, bool)
    chosen: list[np.ndarray] = []
    have = 0
    batch = 0
    while have < k:
        ms = sample_replacement(gs, est.ell, stream.child(2 * batch), dedup=True, workers=workers)
        fresh = ~seen[ms.items]
        items, counts = ms.items[fresh], ms.counts[fresh]
        seen[items] = True
        keys = exponential_keys(counts.astype(np.float64), stream.child(2 * batch + 1))
        need = k - have
        if items.size > need:
            part = np.argpartition(keys, need - 1)[:need]
            items, keys = items[part], keys[part]
        chosen.append(items[np.argsort(keys, kind="stable")])
        have += items.size
        batch += 1
    out = np.concatenate(chosen)
    info = NoReplacementInfo(est.ell, est.t, batch)
    return (out, info) if return_info else out


@numba.njit(cache=True, nogil=True)
def _repeated(order, sw, start, cap, tree, tree_off, tree_leaves, top, pt, top_groups,
              n, k, ell, trials, gen, out, batches):
    stamp = np.full(n, -1, np.int64)
    items = np.empty(ell, np.int64)
    counts = np.empty(ell, np.int64)
    mg, sg, sn, sl, swd, sm, hits = _buffers(tree_leaves, pt)
    for t in range(trials):
        have = 0
        b = 0
        while have < k:
            pos, _ = _sample_all(order, sw, start, cap, tree, tree_off, tree_leaves,
                                 top, pt, top_groups, ell, gen, True, items, counts,
                                 mg, sg, sn, sl, swd, sm, hits)
            fresh = np.empty(pos, np.int64)
            keys = np.empty(pos)
            nf = 0
            for q in range(pos):
                it = items[q]
                if stamp[it] != t:
                    stamp[it] = t
                    fresh[nf] = it
                    keys[nf] = _exp_key(np.float64(counts[q]), gen)
                    nf += 1
            rank = np.argsort(keys[:nf])
            take = min(nf, k - have)
            for r in range(take):
                out[t, have + r] = fresh[rank[r]]
            have += take
            b += 1
        batches[t] = b


def sample_no_replacement_repeated(gs: GroupedSampler, k: int, trials: int, stream: RngStream,
                                   ell: int | None = None):
    """``trials`` independent queries on one generator.

    Returns ``(samples, batches)``: a ``trials x k`` array of items in draw
    order and the number of batches each query used.
    """
    if not 1 <= k < gs.n:
        raise ValueError("repeated kernel needs 1 <= k < n")
    if ell is None:
        ell = choose_ell(gs, k).ell
    out = np.empty((trials, k), np.int64)
    batches = np.empty(trials, np.int64)
    _repeated(*gs._kernel_args(), gs.n, k, ell, trials, stream.gen, out, batches)
    return out, batches
