"""Mini-batch weighted reservoir sampling without replacement.

Every streamed item conceptually gets a key ``v_j ~ Exp(w_j)``; the reservoir
holds the ``k`` smallest keys and ``T`` is the largest of them (``+inf``
until ``k`` items have been seen).  Within a batch ``T`` is fixed, so item
``j`` enters with probability ``1 - exp(-T w_j)`` independently of the rest.
Those events are the hits of a rate-``T`` Poisson process on the cumulative
weight axis, which lets a PE jump ahead by ``Exp(T)`` units of weight instead
of touching every item.  A hit on item ``j`` draws its key from ``Exp(w_j)``
conditioned on ``< T``.

After a batch, the global ``k``-th smallest key becomes the new ``T`` and
every PE drops keys above it.  A skip carried over a threshold change is
rescaled by ``T_old / T_new``, which keeps it ``Exp(T_new)``-distributed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import RngStream, _exp_key, parallel_map


def insertion_key(w: float, T: float, stream: RngStream) -> float:
    """``Exp(w)`` conditioned on being below ``T``; always ``< T``."""
    if not (w > 0 and T > 0):
        raise ValueError("insertion_key needs w > 0 and T > 0")
    if math.isinf(T):
        u = stream.gen.random()
        while u == 0.0:
            u = stream.gen.random()
        return -math.log(u) / w
    return float(_ins_key(w, T, stream.gen))


@numba.njit(cache=True, nogil=True, inline="always")
def _ins_key(w, T, gen):
    q = -math.expm1(-T * w)
    r = gen.random()
    while r == 0.0:
        r = gen.random()
    v = -math.log1p(-r * q) / w
    if v >= T:
        v = np.nextafter(T, 0.0)
    return v


@numba.njit(cache=True, nogil=True)
def _scan_batch(w, T, skip, gen, out_pos, out_key):
    """Scan one batch of weights.  Returns ``(inserted, remaining_skip)``.

    ``skip < 0`` means no skip is pending.  With ``T = inf`` every item is
    inserted with a plain exponential key.
    """
    cnt = 0
    if math.isinf(T):
        for j in range(w.size):
            out_pos[cnt] = j
            out_key[cnt] = _exp_key(w[j], gen)
            cnt += 1
        return cnt, -1.0
    if skip < 0.0:
        skip = _exp_key(T, gen)
    for j in range(w.size):
        if skip >= w[j]:
            skip -= w[j]
            continue
        out_pos[cnt] = j
        out_key[cnt] = _ins_key(w[j], T, gen)
        cnt += 1
        skip = _exp_key(T, gen)
    return cnt, skip


def threshold_select(keys: list[np.ndarray], k: int) -> float:
    """Global ``k``-th smallest key across PEs, or ``+inf`` if fewer than ``k``."""
    total = sum(x.size for x in keys)
    if total < k:
        return math.inf
    allk = np.concatenate(keys)
    return float(np.partition(allk, k - 1)[k - 1])


@dataclass
class LocalReservoir:
    """One PE's entries, kept sorted by key."""

    keys: np.ndarray = field(default_factory=lambda: np.empty(0))
    items: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.empty(0))
    skip: float = -1.0
    insertions: int = 0

    def insert(self, keys, items, weights):
        order = np.argsort(keys, kind="stable")
        keys, items, weights = keys[order], items[order], weights[order]
        at = np.searchsorted(self.keys, keys, side="right")
        self.keys = np.insert(self.keys, at, keys)
        self.items = np.insert(self.items, at, items)
        self.weights = np.insert(self.weights, at, weights)
        self.insertions += keys.size

    def split(self, T: float):
        """Drop entries with key above ``T``."""
        cut = np.searchsorted(self.keys, T, side="right")
        self.keys = self.keys[:cut]
        self.items = self.items[:cut]
        self.weights = self.weights[:cut]


class Reservoir:
    """``k``-reservoir over ``pes`` simulated PEs; PE ``q`` draws on
    ``stream.child(q)``."""

    def __init__(self, k: int, pes: int, stream: RngStream, workers: int = 1):
        if k < 1 or pes < 1:
            raise ValueError("need k >= 1 and at least one PE")
        self.k = k
        self.pes = pes
        self.T = math.inf
        self.seen = 0
        self.batches = 0
        self.local = [LocalReservoir() for _ in range(pes)]
        self._gens = [stream.child(q).gen for q in range(pes)]
        self._workers = workers

    def process_batch(self, batch):
        """``batch[q]`` is ``(items, weights)`` for PE ``q`` (may be empty)."""
        if len(batch) != self.pes:
            raise ValueError(f"expected {self.pes} per-PE batches, got {len(batch)}")
        T = self.T

        def scan(q):
            ids, w = batch[q]
            w = np.ascontiguousarray(w, dtype=np.float64)
            if w.size and not np.all(w > 0):
                raise ValueError("weights must be positive")
            loc = self.local[q]
            pos = np.empty(w.size, np.int64)
            key = np.empty(w.size)
            cnt, loc.skip = _scan_batch(w, T, loc.skip, self._gens[q], pos, key)
            pos = pos[:cnt]
            loc.insert(key[:cnt], np.asarray(ids, np.int64)[pos], w[pos])
            return w.size

        self.seen += sum(parallel_map(scan, range(self.pes), self._workers))
        self.batches += 1
        T_new = threshold_select([loc.keys for loc in self.local], self.k)
        if T_new < self.T:
            for loc in self.local:
                loc.split(T_new)
                if loc.skip >= 0 and math.isfinite(self.T):
                    loc.skip *= self.T / T_new
            self.T = T_new

    def sample(self) -> np.ndarray:
        """Current reservoir items ordered by key."""
        keys = np.concatenate([loc.keys for loc in self.local])
        items = np.concatenate([loc.items for loc in self.local])
        return items[np.argsort(keys, kind="stable")]

    def keys(self) -> np.ndarray:
        return np.sort(np.concatenate([loc.keys for loc in self.local]))

    def insertions(self) -> np.ndarray:
        return np.array([loc.insertions for loc in self.local])


def round_robin(items: np.ndarray, weights: np.ndarray, pes: int, b: int):
    """Yield mini-batches: each round PE ``q`` takes the next ``b`` items."""
    n = items.size
    step = pes * b
    for lo in range(0, n, step):
        yield [(items[min(n, lo + q * b):min(n, lo + (q + 1) * b)],
                weights[min(n, lo + q * b):min(n, lo + (q + 1) * b)]) for q in range(pes)]


def stream_reservoir(weights, k: int, pes: int, b: int, stream: RngStream, workers: int = 1) -> Reservoir:
    w = np.asarray(weights, dtype=np.float64)
    res = Reservoir(k, pes, stream, workers)
    for batch in round_robin(np.arange(w.size), w, pes, b):
        res.process_batch(batch)
    return res


@numba.njit(cache=True, nogil=True)
def _repeated(w, k, pes, b, trials, gen, out, ins):
    n = w.size
    cap = k + pes * b + 1
    rk = np.empty(cap)
    ri = np.empty(cap, np.int64)
    pos = np.empty(b, np.int64)
    key = np.empty(b)
    skip = np.empty(pes)
    for t in range(trials):
        T = np.inf
        m = 0
        skip[:] = -1.0
        for lo in range(0, n, pes * b):
            for q in range(pes):
                s = min(n, lo + q * b)
                e = min(n, lo + (q + 1) * b)
                if s >= e:
                    continue
                cnt, skip[q] = _scan_batch(w[s:e], T, skip[q], gen, pos, key)
                for c in range(cnt):
                    rk[m] = key[c]
                    ri[m] = s + pos[c]
                    m += 1
                ins[t, q] += cnt
            if m >= k:
                order = np.argsort(rk[:m])
                T_new = rk[order[k - 1]]
                tk = rk[order[:k]].copy()
                ti = ri[order[:k]].copy()
                rk[:k] = tk
                ri[:k] = ti
                m = k
                if T_new < T:
                    if not np.isinf(T):
                        for q in range(pes):
                            if skip[q] >= 0.0:
                                skip[q] *= T / T_new
                    T = T_new
        order = np.argsort(rk[:m])
        for c in range(min(m, out.shape[1])):
            out[t, c] = ri[order[c]]


def reservoir_repeated(weights, k: int, pes: int, b: int, trials: int, stream: RngStream):
    """``trials`` full streaming runs on one generator.

    Returns ``(samples, insertions)``: ``trials x min(k, n)`` items ordered by
    key and a ``trials x pes`` matrix of local insertion counts.
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    out = np.full((trials, min(k, w.size)), -1, np.int64)
    ins = np.zeros((trials, pes), np.int64)
    _repeated(w, k, pes, b, trials, stream.gen, out, ins)
    return out, ins


def insertion_bound(n: int, k: int, pes: int) -> float:
    """``(k/p) (1 + ln(n/k))`` expected local insertions per PE."""
    return k / pes * (1.0 + math.log(n / k))
