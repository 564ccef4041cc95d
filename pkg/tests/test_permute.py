import math

import numpy as np
import pytest

from wrs import permute
from wrs.core import RngStream
from wrs.verify import chi_square


def test_single_item(stream):
    assert permute.weighted_permutation([3.0], stream).tolist() == [0]
    st = permute.bucket_occupancy_audit([3.0], 5, stream)
    assert st.nonempty == 1.0


@pytest.mark.parametrize("n", [2, 10, 1000, 50_000])
def test_is_permutation(n):
    w = 2.0 ** np.random.default_rng(n).uniform(0, 30, n)
    for workers in (1, 3):
        out = permute.weighted_permutation(w, RngStream(n, workers), workers=workers, check=True)
        assert np.array_equal(np.sort(out), np.arange(n))


def test_first_position_21():
    trials = 10**6
    mat = permute.weighted_permutation_repeated([2.0, 1.0], trials, RngStream(1, 0))
    p = (mat[:, 0] == 0).mean()
    assert abs(p - 2 / 3) <= 4 * math.sqrt(2 / 9 / trials)


def test_uniform_three_orders():
    mat = permute.weighted_permutation_repeated(np.ones(3), 10**6, RngStream(2, 0))
    codes = mat @ np.array([1, 3, 9])
    counts = np.bincount(codes, minlength=27)
    orders = [c for c in range(27) if counts[c] > 0]
    assert len(orders) == 6
    assert chi_square(counts[orders], np.full(6, 1 / 6)).passed


def test_worker_count_does_not_change_output():
    w = np.random.default_rng(3).random(200_000) + 0.1
    a = permute.weighted_permutation(w, RngStream(3, 0), workers=1)
    b = permute.weighted_permutation(w, RngStream(3, 0), workers=4)
    assert np.array_equal(a, b)


def test_bucket_order_matches_key_sort():
    rng = np.random.default_rng(4)
    for r in range(300):
        n = int(rng.integers(2, 300))
        w = 2.0 ** rng.uniform(0, 25, n)
        pk = permute.permutation_keys(w, RngStream(4, r))
        assert np.array_equal(permute.order_from_keys(pk), np.argsort(pk.keys, kind="stable"))


@pytest.mark.parametrize("spread", [0.0, 30.0])
def test_occupancy_bound(spread):
    rng = np.random.default_rng(5)
    w = 2.0 ** rng.uniform(0, spread, 10**4)
    st = permute.bucket_occupancy_audit(w, 10, RngStream(5, 0))
    assert st.mean <= 0.37 + 0.01
    assert st.clamped <= 2.5


def test_uniform_occupancy_near_quarter():
    st = permute.bucket_occupancy_audit(np.ones(10**4), 10, RngStream(6, 0))
    assert abs(st.mean - 0.25) < 0.01


def test_comparison_sort_fallback():
    # a huge ratio makes the key range exceed the counting-sort limit
    w = np.array([1.0, 2.0**1000, 3.0])
    K = permute.key_range(3, w.max() / w.min())
    assert not permute.uses_counting_sort(3, K)
    out = permute.weighted_permutation(w, RngStream(7, 0), check=True)
    assert sorted(out.tolist()) == [0, 1, 2]
