"""Oracles and statistical tests.

Everything here is independent of the samplers' random paths: implied
masses are read off built structures, small distributions are enumerated
exactly, and Monte Carlo output is judged by Pearson chi-square or
Kolmogorov-Smirnov tests.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy import stats

from .alias import AliasTable
from .compressed import CompressedTable
from .twolevel import TwoLevelTable

ALPHA = 0.001


# --- implied masses ------------------------------------------------------------

def alias_masses(t: AliasTable, n: int | None = None) -> np.ndarray:
    """Masses indexed by item id; local tables holding global ids get an
    array long enough for their largest id."""
    if n is None:
        n = max(t.n, int(t.item.max(initial=-1)) + 1, int(t.alias.max(initial=-1)) + 1)
    thr = t.bucket_weight
    own = np.bincount(t.item, weights=t.share, minlength=n)
    lent = np.bincount(t.alias, weights=thr - t.share, minlength=n)
    return own + lent


def two_level_masses(t: TwoLevelTable) -> np.ndarray:
    """Meta mass of the group times the item's share of its local table."""
    n = t.n
    meta = alias_masses(t.meta)
    sizes = np.diff(t.offsets)
    group = np.repeat(np.arange(t.group_count), sizes)
    thr = (t.group_weights / sizes)[group]
    loc = t.locals
    local = (np.bincount(loc.item, weights=loc.share, minlength=n)
             + np.bincount(loc.alias, weights=thr - loc.share, minlength=n))
    return meta[group] * local / t.group_weights[group]


def compressed_masses(t: CompressedTable) -> np.ndarray:
    bits = np.unpackbits(t.bits.view(np.uint8), bitorder="little")[: t.m]
    starts = np.flatnonzero(bits)
    counts = np.diff(np.append(starts, t.m))
    wh = t.weights * t.scale
    last = wh - (np.ceil(wh) - 1.0)
    accept = (counts - 1) + last
    return accept / accept.sum() * t.total


def implied_masses(t) -> np.ndarray:
    """Per-item mass (in weight units) implied by a built structure."""
    if isinstance(t, AliasTable):
        return alias_masses(t)
    if isinstance(t, TwoLevelTable):
        return two_level_masses(t)
    if isinstance(t, CompressedTable):
        return compressed_masses(t)
    raise TypeError(f"no implied masses for {type(t).__name__}")


def masses_match(masses: np.ndarray, weights: np.ndarray, rel: float = 1e-9) -> bool:
    w = np.asarray(weights, dtype=np.float64)
    return masses.shape == w.shape and bool(np.all(np.abs(masses - w) <= rel * w))


# --- exact distributions -------------------------------------------------------

@dataclass(frozen=True)
class ExactDistribution:
    probs: Mapping[Hashable, float]

    def __post_init__(self):
        s = math.fsum(self.probs.values())
        if abs(s - 1.0) > 1e-12:
            raise AssertionError(f"distribution sums to {s!r}")

    @property
    def outcomes(self) -> list:
        return list(self.probs)

    def vector(self, outcomes: Sequence | None = None) -> np.ndarray:
        return np.array([self.probs[o] for o in (outcomes or self.outcomes)])


def enumerate_ordered(weights: Sequence[float], k: int) -> ExactDistribution:
    """Ordered ``k``-tuples of distinct items drawn successively, each with
    probability proportional to weight among the remaining items."""
    w = [float(x) for x in weights]
    n = len(w)
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    if n > 8:
        raise ValueError("enumeration limited to n <= 8")
    probs: dict[tuple, float] = {}

    def rec(prefix, p):
        if len(prefix) == k:
            probs[tuple(prefix)] = p
            return
        remaining = math.fsum(w[i] for i in range(n) if i not in prefix)
        for i in range(n):
            if i not in prefix:
                rec(prefix + [i], p * w[i] / remaining)

    rec([], 1.0)
    return ExactDistribution(probs)


def enumerate_wrsn(weights: Sequence[float], k: int) -> ExactDistribution:
    """Subset distribution of successive weighted sampling without
    replacement; outcomes are sorted tuples."""
    if len(weights) > 8 or k > 4:
        raise ValueError("enumeration limited to n <= 8, k <= 4")
    out: dict[tuple, float] = {}
    for tup, p in enumerate_ordered(weights, k).probs.items():
        key = tuple(sorted(tup))
        out[key] = out.get(key, 0.0) + p
    return ExactDistribution(out)


def wrsn_closed_form(weights: Sequence[float], subset: Sequence[int]) -> float:
    """Probability of a subset via exponential clocks.

    ``S`` is the sample iff the largest key inside ``S`` beats every key
    outside.  Conditioning on which member ``j`` is largest and expanding
    ``prod (1 - exp(-w_i x))`` gives an alternating sum over subsets ``A`` of
    ``S \\ {j}``.
    """
    w = [float(x) for x in weights]
    s = list(subset)
    outside = math.fsum(w) - math.fsum(w[i] for i in s)
    total = 0.0
    for j in s:
        rest = [i for i in s if i != j]
        for r in range(len(rest) + 1):
            for a in itertools.combinations(rest, r):
                wa = math.fsum(w[i] for i in a)
                total += (-1) ** r * w[j] / (w[j] + wa + outside)
    return total


def enumerate_multinomial(weights: Sequence[float], k: int) -> ExactDistribution:
    """Multiplicity vectors of ``k`` draws with replacement."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if n > 5 or k > 6:
        raise ValueError("enumeration limited to n <= 5, k <= 6")
    p = w / w.sum()
    probs = {}
    for vec in compositions(k, n):
        coef = math.factorial(k)
        for c in vec:
            coef //= math.factorial(c)
        probs[vec] = coef * math.prod(float(p[i]) ** c for i, c in enumerate(vec))
    return ExactDistribution(probs)


def compositions(k: int, n: int):
    """All length-``n`` tuples of non-negative ints summing to ``k``."""
    if n == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in compositions(k - first, n - 1):
            yield (first,) + rest


# --- statistical tests ---------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical: float
    dof: int
    pvalue: float
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def merge_cells(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Pool cells whose expected count is below ``min_expected``."""
    small = expected < min_expected
    if not small.any():
        return observed, expected
    obs = list(observed[~small])
    exp = list(expected[~small])
    po, pe = observed[small].sum(), expected[small].sum()
    if pe >= min_expected or not exp:
        obs.append(po)
        exp.append(pe)
    else:
        j = int(np.argmin(exp))
        obs[j] += po
        exp[j] += pe
    return np.asarray(obs, dtype=np.float64), np.asarray(exp, dtype=np.float64)


def chi_square(observed, probs, alpha: float = ALPHA, tests: int = 1) -> TestResult:
    """Pearson goodness of fit at level ``alpha / tests``."""
    observed = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if observed.shape != probs.shape:
        raise ValueError("observed and probs differ in shape")
    total = observed.sum()
    expected = probs / probs.sum() * total
    obs, exp = merge_cells(observed, expected)
    if obs.size < 2:
        raise ValueError("chi-square needs at least two cells")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    level = alpha / max(1, tests)
    crit = float(stats.chi2.ppf(1.0 - level, dof))
    return TestResult(stat, crit, dof, float(stats.chi2.sf(stat, dof)), stat <= crit)


def chi_square_outcomes(samples: Sequence[Hashable], dist: ExactDistribution, alpha: float = ALPHA,
                        tests: int = 1) -> TestResult:
    """Chi-square of observed outcomes against an exact distribution.

    Outcomes the oracle assigns zero mass must never occur.
    """
    counts: dict = {}
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
    unknown = set(counts) - set(dist.probs)
    if unknown:
        return TestResult(math.inf, 0.0, 0, 0.0, False)
    keys = dist.outcomes
    return chi_square([counts.get(o, 0) for o in keys], dist.vector(keys), alpha, tests)


def ks_test(samples, cdf: Callable, alpha: float = ALPHA) -> TestResult:
    res = stats.kstest(np.asarray(samples), cdf)
    n = len(samples)
    crit = float(stats.kstwo.ppf(1.0 - alpha, n))
    return TestResult(float(res.statistic), crit, n, float(res.pvalue), bool(res.statistic <= crit))


def within_sigma(observed: float, expected: float, sd: float, nsig: float = 4.0) -> bool:
    return abs(observed - expected) <= nsig * sd
