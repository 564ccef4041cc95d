import math

import numpy as np
import pytest
from scipy import stats

from wrs import core, verify
from wrs.core import RngStream, WeightTable


def test_uniform01_is_reproducible():
    a = core.uniform01(RngStream(42, 0))
    b = core.uniform01(RngStream(42, 0))
    assert a == b == 0.8201981478608876


def test_streams_differ_by_id_and_child():
    assert core.uniform01(RngStream(42, 0)) != core.uniform01(RngStream(42, 1))
    root = RngStream(42, 0)
    assert root.child(0).uniform01() != root.child(1).uniform01()
    assert root.child(3).uniform01() == RngStream(42, 0).child(3).uniform01()


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("WRS_SEED", "0x10")
    assert core.default_seed() == 16
    monkeypatch.delenv("WRS_SEED")
    assert core.default_seed() == 0xC0FFEE


def test_uniform_mean_and_bins():
    u = RngStream(7, 0).uniforms(10**6)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.002
    counts = np.bincount((u * 100).astype(int), minlength=100)
    stat = np.sum((counts - 1e4) ** 2 / 1e4)
    assert stat < stats.chi2.ppf(0.999, 99)


def test_exponential_key_mean():
    keys = core.exponential_keys(np.ones(10**6), RngStream(8, 0))
    assert np.all(keys > 0)
    assert abs(keys.mean() - 1.0) < 0.004


def test_exponential_key_scaling():
    k1 = core.exponential_key(1.0, RngStream(9, 0))
    k2 = core.exponential_key(2.0, RngStream(9, 0))
    assert k2 == k1 / 2


def test_exponential_race():
    s = RngStream(10, 0)
    wins = 0
    trials = 10**5
    for i in range(trials):
        wins += core.exponential_key(2.0, s) < core.exponential_key(1.0, s)
    assert abs(wins / trials - 2 / 3) < 0.005


def test_binomial_split_edges(stream):
    assert core.binomial_split(0, 1.0, 1.0, stream) == 0
    assert core.binomial_split(9, 1.0, 0.0, stream) == 9
    assert core.binomial_split(9, 0.0, 1.0, stream) == 0


def test_binomial_split_mean():
    s = RngStream(11, 0)
    x = np.array([core.binomial_split(100, 1.0, 1.0, s) for _ in range(10**5)])
    assert abs(x.mean() - 50) < 0.7


@pytest.mark.parametrize("k,lw,rw", [(3, 1.0, 2.0), (20, 1.0, 4.0), (20, 4.0, 1.0), (300, 1.0, 1.0)])
def test_binomial_split_matches_pmf(k, lw, rw):
    s = RngStream(12, k)
    x = np.array([core.binomial_split(k, lw, rw, s) for _ in range(20000)])
    p = lw / (lw + rw)
    probs = stats.binom.pmf(np.arange(k + 1), k, p)
    obs = np.bincount(x, minlength=k + 1)
    assert verify.chi_square(obs, probs).passed


def test_prefix_sums_small():
    assert core.prefix_sums(np.array([])).size == 0
    assert core.prefix_sums([1.0, 2.0, 3.0]).tolist() == [1.0, 3.0, 6.0]


@pytest.mark.parametrize("workers", [1, 4])
def test_prefix_sums_worker_independent(workers):
    v = np.random.default_rng(3).random(10**5)
    ref = core.prefix_sums(v, 1, block=1000)
    out = core.prefix_sums(v, workers, block=1000)
    assert np.array_equal(out, ref)
    assert np.allclose(out, np.cumsum(v), rtol=1e-12)


def test_compensated_sum():
    v = np.array([1e16, 1.0, -1e16, 1.0])
    assert core.compensated_sum(v) == 2.0
    assert core.compensated_prefix(v)[-1] == 2.0


def test_weight_table_validation():
    wt = WeightTable.from_weights([1.0, 4.0])
    assert wt.n == 2 and wt.total == 5.0 and wt.ratio == 4.0
    for bad in ([], [1.0, 0.0], [1.0, -2.0], [math.inf], [math.nan]):
        with pytest.raises(ValueError):
            WeightTable.from_weights(bad)


def test_split_ranges_cover():
    r = core.split_ranges(10, 3)
    assert r[0][0] == 0 and r[-1][1] == 10
    assert all(a[1] == b[0] for a, b in zip(r, r[1:]))
