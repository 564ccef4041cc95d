"""Weight tables, seeded random streams, variate generators and fork-join helpers.

Every sampler in the package takes an :class:`RngStream`.  A stream is a
numpy ``Generator`` over a Philox counter-based bit generator keyed by
``(seed, stream_id)``, so per-worker streams are derived without any
coordination and the same pair always replays the same variates.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numba
import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 0xC0FFEE

# fixed block length for work split across workers; results never depend on
# the worker count because blocks, not workers, own the random streams
BLOCK = 1 << 16
SMALL_SPLIT = 4
INVERSION_MEAN = 48.0


def default_seed() -> int:
    """Seed from ``WRS_SEED`` (decimal or 0x-hex) or the package default."""
    raw = os.environ.get("WRS_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    return int(raw, 0) & MASK64


def mix64(a: int, b: int) -> int:
    """SplitMix64 finalizer over two words, used to derive child stream ids."""
    z = (a * 0x9E3779B97F4A7C15 + b + 0x632BE59BD9B4E019) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams are single-owner: hand one to a worker, don't share it between
    threads.  ``child(i)`` derives an independent stream deterministically.
    """

    __slots__ = ("seed", "stream_id", "gen")

    def __init__(self, seed: int | None = None, stream_id: int = 0):
        self.seed = default_seed() if seed is None else int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        self.gen = np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def child(self, i: int) -> "RngStream":
        return RngStream(self.seed, mix64(self.stream_id, int(i) + 1))

    def uniform01(self) -> float:
        return self.gen.random()

    def uniforms(self, size: int) -> np.ndarray:
        return self.gen.random(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed:#x}, stream_id={self.stream_id:#x})"


class SampleWithMultiplicity(NamedTuple):
    item: int
    multiplicity: int


@dataclass(frozen=True)
class WeightTable:
    """Validated positive weights with cached aggregates.

    ``total`` is a pairwise sum (numpy's reduction), ``ratio`` is
    ``w_max / w_min`` and ``log_ratio`` its ceiled base-2 logarithm.
    """

    weights: np.ndarray
    total: float
    w_min: float
    w_max: float

    @classmethod
    def from_weights(cls, weights: Iterable[float]) -> "WeightTable":
        w = np.ascontiguousarray(np.asarray(weights, dtype=np.float64).ravel())
        if w.size == 0:
            raise ValueError("weight table needs at least one item")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        w.setflags(write=False)
        return cls(w, float(np.sum(w)), float(w.min()), float(w.max()))

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def ratio(self) -> float:
        return self.w_max / self.w_min

    @property
    def log_ratio(self) -> int:
        return max(0, math.ceil(math.log2(self.ratio)))

    def __len__(self) -> int:
        return self.weights.size


def as_table(weights) -> WeightTable:
    return weights if isinstance(weights, WeightTable) else WeightTable.from_weights(weights)


# --- scalar variates -------------------------------------------------------

def uniform01(stream: RngStream) -> float:
    """53-bit uniform in [0, 1)."""
    return stream.gen.random()


def exponential_key(w: float, stream: RngStream) -> float:
    """``-ln(U)/w`` with ``U`` redrawn on an exact zero."""
    if not w > 0:
        raise ValueError(f"exponential_key needs w > 0, got {w!r}")
    u = stream.gen.random()
    while u == 0.0:
        u = stream.gen.random()
    return -math.log(u) / w


def exponential_keys(weights: np.ndarray, stream: RngStream) -> np.ndarray:
    u = stream.gen.random(len(weights))
    while True:
        zero = u == 0.0
        if not zero.any():
            break
        u[zero] = stream.gen.random(int(zero.sum()))
    return -np.log(u) / weights


def binomial_split(k: int, left_weight: float, right_weight: float, stream: RngStream) -> int:
    """Number of the ``k`` samples that fall on the left side.

    Small ``k`` counts Bernoulli trials directly, a small mean uses CDF
    inversion and anything larger goes to numpy's binomial.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if left_weight < 0 or right_weight < 0:
        raise ValueError("weights must be non-negative")
    if k == 0:
        return 0
    if left_weight + right_weight <= 0:
        raise ValueError("binomial_split with both weights zero")
    return int(_bsplit(k, left_weight, right_weight, stream.gen))


@numba.njit(cache=True, nogil=True, inline="always")
def _exp_key(w, gen):
    u = gen.random()
    while u == 0.0:
        u = gen.random()
    return -math.log(u) / w


@numba.njit(cache=True, nogil=True, inline="always")
def _bsplit(k, lw, rw, gen):
    if k == 0 or lw <= 0.0:
        return 0
    if rw <= 0.0:
        return k
    p = lw / (lw + rw)
    if p >= 1.0:
        return k
    if k <= SMALL_SPLIT:
        # direct Bernoulli count; much cheaper than the library's setup
        c = 0
        for _ in range(k):
            c += gen.random() < p
        return c
    q = min(p, 1.0 - p)
    if k * q < INVERSION_MEAN:
        x = _binomial_inversion(k, q, gen)
        return x if q == p else k - x
    return gen.binomial(k, p)


@numba.njit(cache=True, nogil=True, inline="always")
def _binomial_inversion(k, q, gen):
    """Sequential CDF search for Binomial(k, q) with small ``k * q``."""
    r = q / (1.0 - q)
    f0 = math.exp(k * math.log1p(-q))
    while True:
        u = gen.random()
        f = f0
        x = 0
        while u > f and x < k:
            u -= f
            f *= r * (k - x) / (x + 1)
            x += 1
        if u <= f:
            return x


@numba.njit(cache=True, nogil=True, inline="always")
def _uniform_index(n, gen):
    r = int(gen.random() * n)
    while r >= n:
        r = int(gen.random() * n)
    return r


# --- fork-join -------------------------------------------------------------

@lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="wrs")


def parallel_map(fn: Callable, args: Sequence, workers: int = 1) -> list:
    """Apply ``fn`` to every element of ``args`` on up to ``workers`` threads.

    Results keep the input order.  Kernels release the GIL, so threads give
    real parallelism for the numba-compiled parts.
    """
    if workers <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    return list(_pool(workers).map(fn, args))


def split_ranges(n: int, parts: int) -> list[tuple[int, int]]:
    """Boundaries ``ceil(n*k/parts)``; empty ranges are kept."""
    parts = max(1, parts)
    cuts = [-(-n * k // parts) for k in range(parts + 1)]
    return [(cuts[k], cuts[k + 1]) for k in range(parts)]


def block_ranges(n: int, block: int = BLOCK) -> list[tuple[int, int]]:
    return [(lo, min(n, lo + block)) for lo in range(0, n, block)]


def prefix_sums(values, workers: int = 1, block: int = BLOCK) -> np.ndarray:
    """Inclusive prefix sums with a fixed blocking scheme.

    Blocks are scanned locally, block totals are scanned, and offsets are
    added back.  The blocking does not depend on ``workers`` so the output is
    bit-identical for any worker count.
    """
    v = np.asarray(values)
    if v.size == 0:
        return v.copy()
    out = np.empty_like(v)
    blocks = block_ranges(v.size, block)

    def local(r):
        lo, hi = r
        np.cumsum(v[lo:hi], out=out[lo:hi])

    parallel_map(local, blocks, workers)
    totals = np.array([out[hi - 1] for _, hi in blocks], dtype=v.dtype)
    offsets = np.concatenate(([0], np.cumsum(totals)[:-1])).astype(v.dtype)

    def shift(b):
        lo, hi = blocks[b]
        if b:
            out[lo:hi] += offsets[b]

    parallel_map(shift, range(len(blocks)), workers)
    return out


@numba.njit(cache=True, nogil=True)
def compensated_sum(values):
    """Neumaier-compensated sum."""
    s = 0.0
    c = 0.0
    for i in range(values.size):
        x = values[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


@numba.njit(cache=True, nogil=True)
def compensated_prefix(values):
    """Exclusive prefix sums (length n+1) with Neumaier compensation."""
    n = values.size
    out = np.empty(n + 1)
    s = 0.0
    c = 0.0
    out[0] = 0.0
    for i in range(n):
        x = values[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i + 1] = s + c
    return out
