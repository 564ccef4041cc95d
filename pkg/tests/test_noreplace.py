import math

import numpy as np
import pytest

from wrs import noreplace, outsens
from wrs.core import RngStream

FOUR = [0.5, 0.25, 0.125, 0.125]


def test_estimate_t_four_items():
    gs = outsens.build_grouped(FOUR)
    assert noreplace.estimate_t(gs, 4) == 3.0
    assert noreplace.t_exact(FOUR, 4) == 3.0
    ex = noreplace.expected_unique(FOUR, 4)
    assert ex == pytest.approx(2.44873046875, abs=1e-15)
    assert (1 - 1 / math.e) * 3 <= ex <= 3


def test_expected_unique_monte_carlo():
    gs = outsens.build_grouped(FOUR)
    _, distinct = outsens.sample_replacement_repeated(gs, 4, 10**5, RngStream(1, 0), dense=False)
    sd = distinct.std() / math.sqrt(distinct.size)
    assert abs(distinct.mean() - 2.44873046875) <= 4 * sd


def test_estimate_t_uniform_and_single_draw():
    gs = outsens.build_grouped(np.ones(16))
    assert noreplace.estimate_t(gs, 16) == 16
    for w in (FOUR, [1.0, 2.0, 100.0], np.random.default_rng(0).random(50)):
        g = outsens.build_grouped(w)
        heavy = np.count_nonzero(np.asarray(w) / np.sum(w) >= 1.0)
        assert noreplace.estimate_t(g, 1) <= 1 + heavy


@pytest.mark.parametrize("seed", range(4))
def test_group_estimate_within_factor_two(seed):
    w = 2.0 ** np.random.default_rng(seed).uniform(0, 15, 300)
    gs = outsens.build_grouped(w)
    for ell in range(1, 3000, 7):
        t = noreplace.t_exact(w, ell)
        assert t * (1 - 1e-12) <= noreplace.estimate_t(gs, ell) <= 2 * t * (1 + 1e-12)


def test_choose_ell_examples():
    assert noreplace.choose_ell(outsens.build_grouped(FOUR), 1) == noreplace.EllEstimate(2, 2.0)
    n = 4000
    gs = outsens.build_grouped(np.ones(n))
    k = n // 4
    est = noreplace.choose_ell(gs, k)
    assert 2 * k <= est.ell <= 4 * k
    assert est.t >= 2 * k


def test_choose_ell_is_smallest():
    w = 2.0 ** np.random.default_rng(5).uniform(0, 10, 200)
    gs = outsens.build_grouped(w)
    for k in (1, 5, 40, 150, 199):
        est = noreplace.choose_ell(gs, k)
        target = min(2 * k, noreplace.max_t(gs))
        assert est.ell >= k and est.t >= target - 1e-9
        if est.ell > k:
            assert noreplace.estimate_t(gs, est.ell - 1) < target


def test_full_set_and_single(stream):
    gs = outsens.build_grouped([3.0, 1.0, 2.0])
    assert sorted(noreplace.sample_no_replacement(gs, 3, stream).tolist()) == [0, 1, 2]
    assert noreplace.sample_no_replacement(outsens.build_grouped([4.0]), 1, stream).tolist() == [0]
    with pytest.raises(ValueError):
        noreplace.sample_no_replacement(gs, 4, stream)


def test_inclusion_211():
    gs = outsens.build_grouped([2.0, 1.0, 1.0])
    trials = 10**6
    samples, batches = noreplace.sample_no_replacement_repeated(gs, 2, trials, RngStream(2, 0))
    inc = np.array([(samples == i).any(axis=1).mean() for i in range(3)])
    p = np.array([5 / 6, 7 / 12, 7 / 12])
    assert np.all(np.abs(inc - p) <= 4 * np.sqrt(p * (1 - p) / trials))
    assert np.mean(batches > 1) <= 0.5


def test_public_api_distinct_and_info():
    w = np.random.default_rng(3).pareto(1.0, 3000) + 0.01
    gs = outsens.build_grouped(w)
    s = RngStream(4, 0)
    for k in (1, 10, 500, 2999):
        out, info = noreplace.sample_no_replacement(gs, k, s.child(k), workers=2, return_info=True)
        assert out.size == k and np.unique(out).size == k
        assert info.batches >= 1
