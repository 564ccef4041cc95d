import math

import numpy as np
import pytest
from scipy import stats

from wrs import reservoir
from wrs.core import RngStream
from wrs.verify import chi_square, enumerate_wrsn, ks_test


def test_insertion_key_below_threshold():
    s = RngStream(1, 0)
    for T in (1e-6, 0.3, 1.0, 50.0):
        for w in (1e-3, 1.0, 1e3):
            assert reservoir.insertion_key(w, T, s) < T


def test_insertion_key_infinite_threshold():
    s = RngStream(2, 0)
    keys = np.array([reservoir.insertion_key(1.0, math.inf, s) for _ in range(20_000)])
    assert abs(keys.mean() - 1.0) < 4 / math.sqrt(keys.size)


def test_insertion_key_truncated_exponential():
    s = RngStream(3, 0)
    keys = np.array([reservoir.insertion_key(1.0, 1.0, s) for _ in range(10**5)])
    norm = 1 - math.exp(-1.0)
    res = ks_test(keys, lambda x: -np.expm1(-np.clip(x, 0, 1)) / norm)
    assert res.passed


def test_threshold_select():
    assert reservoir.threshold_select([np.array([5.0, 1.0, 3.0])], 2) == 3.0
    keys = [np.array([4.0, 2.0]), np.array([0.5]), np.array([3.0])]
    assert reservoir.threshold_select(keys, 1) == 0.5
    assert reservoir.threshold_select(keys, 5) == math.inf
    rng = np.random.default_rng(0)
    parts = [rng.exponential(size=int(rng.integers(0, 50))) for _ in range(4)]
    T = reservoir.threshold_select(parts, 20)
    kept = np.sort(np.concatenate([p[p <= T] for p in parts]))
    assert np.array_equal(kept, np.sort(np.concatenate(parts))[:20])


def test_fewer_items_than_k():
    res = reservoir.stream_reservoir([1.0, 2.0, 3.0], 5, 2, 1, RngStream(4, 0))
    assert sorted(res.sample().tolist()) == [0, 1, 2]
    assert math.isinf(res.T)


def test_threshold_is_kth_key():
    w = np.random.default_rng(5).random(5000) + 0.01
    res = reservoir.stream_reservoir(w, 50, 4, 7, RngStream(5, 0), workers=2)
    keys = res.keys()
    assert keys.size == 50 and keys[-1] == res.T
    assert res.seen == w.size


def _subset_counts(samples, n, dist):
    masks = np.bitwise_or.reduce(np.left_shift(1, samples), axis=1)
    counts = np.bincount(masks, minlength=1 << n)
    codes = [sum(1 << i for i in s) for s in dist.outcomes]
    assert counts.sum() == counts[codes].sum()
    return counts[codes]


def test_single_pe_matches_oracle():
    w = np.array([3.0, 1.0, 0.5, 2.0, 1.0])
    dist = enumerate_wrsn(w, 2)
    samples, _ = reservoir.reservoir_repeated(w, 2, 1, 1, 10**6, RngStream(6, 0))
    assert chi_square(_subset_counts(samples, 5, dist), dist.vector()).passed


def test_partition_invariance():
    w = np.array([3.0, 1.0, 0.5, 2.0, 1.0, 4.0])
    dist = enumerate_wrsn(w, 3)
    tables = []
    for p, b in [(1, 1), (2, 2), (4, 5)]:
        samples, _ = reservoir.reservoir_repeated(w, 3, p, b, 10**5, RngStream(7, p))
        c = _subset_counts(samples, 6, dist)
        assert chi_square(c, dist.vector(), tests=3).passed
        tables.append(c)
    assert stats.chi2_contingency(np.array(tables))[1] > 0.001


def test_threaded_class_matches_oracle():
    w = np.array([1.0, 5.0, 2.0, 0.5])
    dist = enumerate_wrsn(w, 2)
    samples = np.array([reservoir.stream_reservoir(w, 2, 2, 1, RngStream(8, r)).sample()
                        for r in range(4000)])
    assert chi_square(_subset_counts(samples, 4, dist), dist.vector()).passed


def test_insertion_bound():
    n, k, p = 20_000, 200, 4
    w = np.random.default_rng(9).random(n) + 0.01
    _, ins = reservoir.reservoir_repeated(w, k, p, 10, 20, RngStream(9, 0))
    bound = reservoir.insertion_bound(n, k, p)
    assert ins.mean() <= bound + 4 * math.sqrt(bound / ins.size)
