"""Compressed single-item sampler: one bit per bucket plus a rank directory.

Weights are rescaled to ``w_hat = w * n / W`` so they sum to ``n``.  Item
``i`` owns ``ceil(w_hat_i)`` consecutive buckets; a set bit marks the first
bucket of each item, so ``rank1(j) - 1`` is the owner of bucket ``j``.  A
query picks a bucket uniformly and accepts it unless it is the owner's last
bucket, which is accepted with probability ``w_hat_i - (ceil(w_hat_i) - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import BLOCK, RngStream, _uniform_index, as_table, parallel_map, prefix_sums

SUPER = 512  # bits per superblock
WORDS_PER_SUPER = SUPER // 64


@dataclass
class CompressedTable:
    bits: np.ndarray  # uint64 words, bit j lives in word j >> 6 at position j & 63
    m: int
    super_rank: np.ndarray  # ones before each superblock, int64
    block_rank: np.ndarray  # ones before each word inside its superblock, uint16
    scale: float  # n / W, shared by build and query
    weights: np.ndarray
    total: float

    @property
    def n(self) -> int:
        return self.weights.size

    def counts(self) -> np.ndarray:
        """Bucket count per item."""
        return np.ceil(self.weights * self.scale).astype(np.int64)

    def rank1(self, j: int) -> int:
        """Number of ones in ``bits[0..j]`` inclusive."""
        return int(_rank1(self.bits, self.super_rank, self.block_rank, j))

    def bit(self, j: int) -> int:
        return int((self.bits[j >> 6] >> np.uint64(j & 63)) & np.uint64(1))


@numba.njit(cache=True, nogil=True)
def _rank1(bits, super_rank, block_rank, j):
    wi = j >> 6
    word = bits[wi]
    sh = 63 - (j & 63)
    masked = (word << np.uint64(sh)) if sh > 0 else word
    # popcount via SWAR
    x = masked - ((masked >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    pc = (x * np.uint64(0x0101010101010101)) >> np.uint64(56)
    return super_rank[wi // 8] + np.int64(block_rank[wi]) + np.int64(pc)


@numba.njit(cache=True, nogil=True)
def _set_bits(starts, bits):
    for s in starts:
        bits[s >> 6] |= np.uint64(1) << np.uint64(s & 63)


def build_rank(bits: np.ndarray, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Superblock and in-superblock word ranks for ``bits``."""
    nw = bits.size
    pad = (-nw) % WORDS_PER_SUPER
    pc = np.bitwise_count(np.concatenate([bits, np.zeros(pad, np.uint64)])).astype(np.int64)
    pc = pc.reshape(-1, WORDS_PER_SUPER)
    inner = np.cumsum(pc, axis=1) - pc
    totals = pc.sum(axis=1)
    super_rank = np.concatenate(([0], prefix_sums(totals, workers)[:-1])).astype(np.int64)
    return super_rank, inner.ravel()[:nw].astype(np.uint16)


def build_compressed(wt, workers: int = 1) -> CompressedTable:
    wt = as_table(wt)
    n = wt.n
    scale = n / wt.total
    counts = np.ceil(wt.weights * scale).astype(np.int64)
    ends = prefix_sums(counts, workers)
    m = int(ends[-1])
    starts = ends - counts
    bits = np.zeros((m + 63) // 64, np.uint64)
    parallel_map(lambda r: _set_bits(starts[r[0]:r[1]], bits),
                 [(lo, hi) for lo, hi in _word_aligned_ranges(starts, workers)], workers)
    super_rank, block_rank = build_rank(bits, workers)
    return CompressedTable(bits, m, super_rank, block_rank, scale, wt.weights, wt.total)


def _word_aligned_ranges(starts, workers):
    # item ranges whose start bits never share a word across ranges
    n = starts.size
    if workers <= 1 or n < 2 * BLOCK:
        return [(0, n)]
    cuts = [0]
    for k in range(1, workers):
        c = -(-n * k // workers)
        word = starts[c] >> 6
        c = int(np.searchsorted(starts, word << 6, side="left"))
        cuts.append(max(cuts[-1], c))
    cuts.append(n)
    return list(zip(cuts[:-1], cuts[1:]))


@numba.njit(cache=True, nogil=True)
def _draw_compressed(bits, super_rank, block_rank, m, weights, scale, gen, out, iters):
    total_iters = 0
    for t in range(out.size):
        while True:
            total_iters += 1
            j = _uniform_index(m, gen)
            i = _rank1(bits, super_rank, block_rank, j) - 1
            last = j + 1 == m or ((bits[(j + 1) >> 6] >> np.uint64((j + 1) & 63)) & np.uint64(1)) == 1
            if not last:
                break
            wh = weights[i] * scale
            frac = wh - (math.ceil(wh) - 1.0)
            if gen.random() < frac:
                break
        out[t] = i
    iters[0] += total_iters


def _args(t: CompressedTable):
    return (t.bits, t.super_rank, t.block_rank, t.m, t.weights, t.scale)


def sample_compressed(t: CompressedTable, stream: RngStream) -> int:
    out = np.empty(1, np.int64)
    _draw_compressed(*_args(t), stream.gen, out, np.zeros(1, np.int64))
    return int(out[0])


def sample_compressed_many(t: CompressedTable, k: int, stream: RngStream, workers: int = 1,
                           return_iterations: bool = False):
    """``k`` draws; with ``return_iterations`` also the total loop count."""
    out = np.empty(k, np.int64)
    nb = math.ceil(k / BLOCK)
    iters = np.zeros((max(nb, 1), 1), np.int64)
    args = _args(t)

    def run(bi):
        lo, hi = bi * BLOCK, min(k, (bi + 1) * BLOCK)
        _draw_compressed(*args, stream.child(bi).gen, out[lo:hi], iters[bi])

    parallel_map(run, range(nb), workers)
    if return_iterations:
        return out, int(iters.sum())
    return out
