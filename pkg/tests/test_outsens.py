import numpy as np
import pytest

from wrs import outsens
from wrs.core import RngStream
from wrs.verify import chi_square, enumerate_multinomial

from conftest import four_sigma


def test_group_index():
    assert outsens.group_index(np.array([1.0, 5.0, 8.0]), 1.0).tolist() == [0, 2, 3]
    w = np.array([1.0, 2 - 2**-52, 2.0, 3.999, 4.0])
    assert outsens.group_index(w, 1.0).tolist() == [0, 0, 1, 1, 2]


def test_uniform_single_group():
    gs = outsens.build_grouped(np.full(10, 0.3))
    assert gs.group_count == 1
    assert gs.top_internal().size == 0


def test_powers_of_two_top_tree():
    gs = outsens.build_grouped([1, 2, 4, 8])
    assert gs.group_count == 4
    assert gs.group_sizes().tolist() == [1, 1, 1, 1]
    assert gs.top_internal().tolist() == [15.0, 3.0, 12.0]
    assert gs.audit()


def test_edges(stream):
    gs = outsens.build_grouped([3, 1, 1, 1])
    assert len(outsens.sample_replacement(gs, 0, stream)) == 0
    one = outsens.sample_replacement(outsens.build_grouped([2.5]), 7, stream)
    assert list(one) == [(0, 7)]


@pytest.mark.parametrize("dedup", [True, False])
def test_multiset_conserves_k(dedup):
    w = np.random.default_rng(1).pareto(1.2, 2000) + 1e-3
    gs = outsens.build_grouped(w, workers=3)
    s = RngStream(2, 0)
    for k in (1, 17, 1000, 50_000):
        ms = outsens.sample_replacement(gs, k, s.child(k), dedup=dedup, workers=2)
        assert ms.total == k
        assert np.all(ms.counts > 0)
        if dedup:
            assert np.unique(ms.items).size == len(ms)


def test_worker_count_does_not_change_output():
    w = np.random.default_rng(3).random(5000) * 100 + 0.01
    gs = outsens.build_grouped(w)
    a = outsens.sample_replacement(gs, 3000, RngStream(4, 0), workers=1)
    b = outsens.sample_replacement(gs, 3000, RngStream(4, 0), workers=4)
    assert a.merged() == b.merged()


def test_3111_against_multinomial():
    gs = outsens.build_grouped([3, 1, 1, 1])
    trials = 10**5
    mat, _ = outsens.sample_replacement_repeated(gs, 4, trials, RngStream(5, 0))
    assert np.all(mat.sum(axis=1) == 4)
    assert abs(mat[:, 0].mean() - 2.0) <= 4 * np.sqrt(1.0 / trials)
    dist = enumerate_multinomial([3, 1, 1, 1], 4)
    codes = mat @ (5 ** np.arange(4))
    lookup = {int(np.dot(o, 5 ** np.arange(4))): i for i, o in enumerate(dist.outcomes)}
    obs = np.zeros(len(lookup))
    for c, cnt in zip(*np.unique(codes, return_counts=True)):
        obs[lookup[int(c)]] = cnt
    assert chi_square(obs, dist.vector()).passed


def test_public_api_matches_multinomial():
    gs = outsens.build_grouped([3, 1, 1, 1])
    s = RngStream(6, 0)
    dist = enumerate_multinomial([3, 1, 1, 1], 2)
    counts = dict.fromkeys(dist.outcomes, 0)
    for t in range(20_000):
        counts[tuple(outsens.sample_replacement(gs, 2, s.child(t)).dense(4).tolist())] += 1
    assert chi_square(list(counts.values()), dist.vector()).passed


def test_descend_group_single_item(stream):
    gs = outsens.build_grouped([1.0, 5.0])
    ms = outsens.descend_group(gs, 0, 1, stream)
    assert list(ms) == [(0, 1)]


def test_descend_group_frequencies():
    gs = outsens.build_grouped([1.0, 1.9])
    assert gs.group_count == 1
    m = 10**5
    ms = outsens.descend_group(gs, 0, m, RngStream(7, 0))
    d = ms.dense(2) / m
    p = np.array([1 / 2.9, 1.9 / 2.9])
    assert np.all(np.abs(d - p) <= four_sigma(p, m))


def test_base_case_on_wide_group():
    # 100 draws from 5000 items stop at the root and dedup by sorting
    w = 1.0 + np.random.default_rng(8).random(5000) * 0.99
    gs = outsens.build_grouped(w)
    assert gs.group_count == 1
    s = RngStream(9, 0)
    hits = np.zeros(w.size)
    for t in range(400):
        ms = outsens.descend_group(gs, 0, 100, s.child(t))
        assert ms.total == 100 and ms.visited == 1
        assert np.unique(ms.items).size == len(ms)
        hits += ms.dense(w.size)
    lo = w < 1.5
    frac = hits[lo].sum() / hits.sum()
    p = w[lo].sum() / w.sum()
    assert abs(frac - p) <= 4 * np.sqrt(p * (1 - p) / hits.sum())


def test_output_sensitive_work():
    w = np.arange(1, 10**5 + 1, dtype=float) ** -2.0
    gs = outsens.build_grouped(w)
    ms = outsens.sample_replacement_sequential(gs, 10**6, RngStream(8, 0))
    assert ms.total == 10**6
    # visited nodes track the output size, not k
    assert ms.visited < 20 * (len(ms) + np.log2(w.size))
