import numpy as np
import pytest
from scipy import stats

from wrs import alias, twolevel
from wrs.core import RngStream
from wrs.verify import implied_masses, masses_match

from conftest import four_sigma


@pytest.mark.parametrize("base", twolevel.BASES)
@pytest.mark.parametrize("groups", [1, 2, 3, 4])
def test_masses_3111(base, groups):
    t = twolevel.build_two_level([3, 1, 1, 1], groups, base)
    assert masses_match(implied_masses(t), np.array([3.0, 1, 1, 1]), 1e-12)


def test_group_extremes():
    w = np.random.default_rng(0).random(50) + 0.01
    one = twolevel.build_two_level(w, 1)
    assert one.group_count == 1 and one.meta.n == 1
    flat = alias.build_sweep(w)
    assert np.allclose(implied_masses(one.local(0)), implied_masses(flat), rtol=1e-12)
    each = twolevel.build_two_level(w, w.size)
    assert np.all(np.diff(each.offsets) == 1)
    assert np.allclose(implied_masses(each.meta), w, rtol=1e-12)


def test_default_groups_follow_workers():
    t = twolevel.build_two_level(np.ones(100), workers=4)
    assert t.group_count == 4
    assert twolevel.build_two_level(np.ones(3), workers=8).group_count == 3


def test_invalid_arguments():
    with pytest.raises(ValueError):
        twolevel.build_two_level([1, 2], 3)
    with pytest.raises(ValueError):
        twolevel.build_two_level([1, 2], 1, "nope")


def test_sample_3111_band():
    t = twolevel.build_two_level([3, 1, 1, 1], 2)
    d = twolevel.sample_two_level_many(t, 10**6, RngStream(1, 0))
    freq = np.bincount(d, minlength=4) / d.size
    p = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    assert np.all(np.abs(freq - p) <= four_sigma(p, d.size))


def test_sample_uniform_8_chisq():
    t = twolevel.build_two_level(np.ones(8), 4, "vose")
    c = np.bincount(twolevel.sample_two_level_many(t, 10**6, RngStream(2, 0), workers=3), minlength=8)
    assert np.sum((c - 1.25e5) ** 2 / 1.25e5) < stats.chi2.ppf(0.999, 7)


def test_single_draw_in_range():
    t = twolevel.build_two_level([5, 1, 2], 2)
    s = RngStream(3, 0)
    assert all(0 <= twolevel.sample_two_level(t, s) < 3 for _ in range(100))


def test_worker_count_does_not_change_output():
    t = twolevel.build_two_level(np.arange(1, 200, dtype=float), 7, "sweep", workers=3)
    ref = twolevel.sample_two_level_many(t, 150_000, RngStream(4, 0), 1)
    assert np.array_equal(twolevel.sample_two_level_many(t, 150_000, RngStream(4, 0), 4), ref)
