import numpy as np
import pytest
from scipy import stats

from wrs import alias
from wrs.core import RngStream, WeightTable
from wrs.verify import implied_masses, masses_match

from conftest import four_sigma

BUILDERS = {
    "vose": alias.build_vose,
    "sweep": alias.build_sweep,
    "psa1": lambda w: alias.build_psa(w, 1),
    "psa3": lambda w: alias.build_psa(w, 3),
    "psa8": lambda w: alias.build_psa(w, 8),
}


@pytest.mark.parametrize("name", list(BUILDERS))
@pytest.mark.parametrize("weights", [[1, 1, 1, 1], [3, 1, 1, 1], [4, 4, 1, 1, 1, 1], [7], [1, 1e-12],
                                     [1, 1, 1, 9, 1, 1, 1, 1, 1, 1, 1, 1, 1]])
def test_masses_exact(name, weights):
    t = BUILDERS[name](weights)
    w = np.asarray(weights, dtype=float)
    assert masses_match(implied_masses(t), w, 1e-12)
    assert np.all(t.share <= t.bucket_weight)


def test_vose_3111_layout():
    t = alias.build_vose([3, 1, 1, 1])
    assert t.bucket_weight == 1.5
    assert t.share.tolist() == [1.5, 1.0, 1.0, 1.0]
    assert t.alias[1:].tolist() == [0, 0, 0]


def test_single_item():
    t = alias.build_vose([7.0])
    assert t.share.tolist() == [7.0] and t.alias.tolist() == [0]


@pytest.mark.parametrize("seed", range(5))
def test_psa_matches_sweep(seed):
    w = np.random.default_rng(seed).pareto(1.5, 5000) + 1e-3
    ref = implied_masses(alias.build_sweep(w))
    for p in (1, 2, 4, 7):
        m = implied_masses(alias.build_psa(w, p))
        assert np.allclose(m, ref, rtol=1e-10)


def test_psa_split_13_items():
    w = np.array([3.0, 1, 1, 5, 1, 1, 0.5, 1, 2, 1, 1, 0.5, 1])
    wt = WeightTable.from_weights(w)
    t, trace = alias.build_psa(wt, 2, debug=True)
    (split,) = trace.splits
    thr = wt.total / wt.n
    assert split.light + split.heavy == 7
    sigma = w[trace.light[:split.light]].sum() + w[trace.heavy[:split.heavy]].sum()
    assert sigma <= 7 * thr < sigma + w[trace.heavy[split.heavy]]
    assert split.spill > 0
    # every bucket is written by exactly one worker, once
    assert trace.writes.max() == 1 and np.all(trace.writer >= 0)
    left = set(trace.light[:split.light]) | set(trace.heavy[:split.heavy])
    for b in range(wt.n):
        assert trace.writer[b] == (0 if b in left else 1)
    assert masses_match(implied_masses(t), w)


def test_psa_huge_item_filled_once():
    w = np.array([100.0] + [1.0] * 99)
    t, trace = alias.build_psa(w, 8, debug=True)
    assert trace.writes[0] == 1
    assert trace.writer[0] == 7
    assert masses_match(implied_masses(t), w)


def test_sample_extreme_skew():
    t = alias.build_vose([1.0, 1e-12])
    draws = alias.sample_many(t, 10**4, RngStream(1, 0))
    assert np.all(draws == 0)


def test_sample_single_calls_3111():
    t = alias.build_sweep([3, 1, 1, 1])
    s = RngStream(2, 0)
    draws = np.array([alias.sample(t, s) for _ in range(10**5)])
    freq = np.bincount(draws, minlength=4) / draws.size
    p = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    assert np.all(np.abs(freq - p) <= four_sigma(p, draws.size))


def test_sample_many_uniform_chisq():
    t = alias.build_psa([1, 1, 1, 1], 2)
    counts = np.bincount(alias.sample_many(t, 10**6, RngStream(3, 0)), minlength=4)
    stat = np.sum((counts - 2.5e5) ** 2 / 2.5e5)
    assert stat < stats.chi2.ppf(0.999, 3)


def test_sample_many_3111_band():
    t = alias.build_vose([3, 1, 1, 1])
    draws = alias.sample_many(t, 10**6, RngStream(4, 0), workers=2)
    freq = np.bincount(draws, minlength=4) / draws.size
    p = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    assert np.all(np.abs(freq - p) <= four_sigma(p, draws.size))


def test_sample_many_edges_and_workers():
    t = alias.build_vose(np.arange(1, 50, dtype=float))
    assert alias.sample_many(t, 0, RngStream(5, 0)).size == 0
    ref = alias.sample_many(t, 200_000, RngStream(5, 0), 1)
    for p in (2, 4):
        assert np.array_equal(alias.sample_many(t, 200_000, RngStream(5, 0), p), ref)


def test_bucket_layout_is_16_bytes():
    assert alias.BUCKET.itemsize == 16
