import math

import numpy as np
import pytest

from wrs import subset
from wrs.core import RngStream


def test_all_ones_bucket_zero():
    ss = subset.build_subset(np.ones(4))
    assert ss.bucket_start[1] == 4
    assert ss.prefix.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_bucket_index_definition():
    assert subset.bucket_index(np.array([0.3]), 3).tolist() == [1]
    w = np.array([1.0, 0.5, 0.5000001, 0.25, 0.2, 1e-9])
    assert subset.bucket_index(w, 4).tolist() == [0, 1, 0, 2, 2, 4]


def test_bracket_invariant():
    w = np.random.default_rng(0).random(10**4) ** 3
    ss = subset.build_subset(w)
    for i in range(ss.L + 1):
        members = ss.bucket_members(i)
        if i < ss.L:
            assert np.all((members <= 2.0**-i) & (members > 2.0 ** -(i + 1)))
        else:
            assert np.all(members <= 2.0**-i)


def test_rejects_weights_above_one():
    with pytest.raises(ValueError):
        subset.build_subset([0.5, 1.5])


def test_certain_item_always_present():
    ss = subset.build_subset([1.0, 1e-9])
    hits, _ = subset.sample_subset_repeated(ss, 10**5, RngStream(1, 0))
    assert hits[:, 0].all()
    assert hits[:, 1].sum() <= 1


def test_uniform_half():
    trials = 10**5
    ss = subset.build_subset(np.full(20, 0.5))
    hits, sizes = subset.sample_subset_repeated(ss, trials, RngStream(2, 0))
    sd = math.sqrt(0.25 / trials)
    assert np.all(np.abs(hits.mean(axis=0) - 0.5) <= 4 * sd)
    assert abs(sizes.mean() - 10) <= 4 * math.sqrt(20 * 0.25 / trials)


def test_mixed_magnitudes_and_covariance():
    w = np.array([0.9, 0.3, 0.01, 2.0**-20])
    trials = 10**5
    hits, _ = subset.sample_subset_repeated(subset.build_subset(w), trials, RngStream(3, 0))
    x = hits.astype(float)
    freq = x.mean(axis=0)
    assert np.all(np.abs(freq[:3] - w[:3]) <= 4 * np.sqrt(w[:3] * (1 - w[:3]) / trials))
    assert hits[:, 3].sum() <= 3
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        cov = np.mean(x[:, i] * x[:, j]) - freq[i] * freq[j]
        sd = math.sqrt(w[i] * (1 - w[i]) * w[j] * (1 - w[j]) / trials)
        assert abs(cov) <= 4 * sd


@pytest.mark.parametrize("workers", [1, 2, 5])
def test_worker_partition(workers):
    w = np.random.default_rng(4).random(300) ** 2
    ss = subset.build_subset(w, workers)
    assert ss.bounds[0] == 0 and ss.bounds[-1] == w.size
    assert np.all(np.diff(ss.bounds) >= 0)
    out = subset.sample_subset(ss, RngStream(4, workers))
    assert np.unique(out).size == out.size
    sizes = [subset.sample_subset(ss, RngStream(5, r)).size for r in range(3000)]
    assert abs(np.mean(sizes) - w.sum()) <= 4 * math.sqrt(np.sum(w * (1 - w)) / 3000)
