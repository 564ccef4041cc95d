"""Acceptance suites shared by the test-suite and ``wrs verify``.

Each ``criterion_N`` function runs one acceptance check at full size (or a
fraction of it with ``scale < 1``) and returns an :class:`Outcome`.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import alias, compressed, noreplace, outsens, permute, reservoir, subset, twolevel
from .core import DEFAULT_SEED, RngStream, WeightTable
from .verify import (
    ALPHA,
    chi_square,
    enumerate_multinomial,
    enumerate_ordered,
    enumerate_wrsn,
    implied_masses,
    masses_match,
    wrsn_closed_form,
)

E_INV = 1.0 / math.e


@dataclass
class Outcome:
    criterion: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None
    soft: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def in_budget(self) -> bool:
        return self.budget is None or self.seconds < self.budget

    @property
    def ok(self) -> bool:
        return self.soft or (self.passed and self.in_budget)

    def line(self) -> str:
        if self.soft:
            status = "PASS" if self.passed else "WARN"
        else:
            status = "PASS" if self.ok else "FAIL"
        budget = f" (budget {self.budget:.0f}s)" if self.budget else ""
        return f"[{status}] criterion {self.criterion}: {self.title} | {self.detail} | {self.seconds:.1f}s{budget}"


def _timed(criterion: int, title: str, budget: float | None, soft: bool = False):
    def wrap(fn: Callable[..., tuple[bool, str]]):
        def run(*args, **kwargs) -> Outcome:
            t0 = time.perf_counter()
            passed, detail, *extra = fn(*args, **kwargs)
            out = Outcome(criterion, title, bool(passed), detail, time.perf_counter() - t0, budget, soft)
            if extra:
                out.warnings = list(extra[0])
            for w in out.warnings:
                warnings.warn(w, RuntimeWarning, stacklevel=2)
            return out

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


def _trials(base: int, scale: float) -> int:
    return max(1, int(round(base * scale)))


def make_weights(dist: str, s: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draws in (0, 1] or a shuffled ``i^-s`` sequence."""
    if dist == "uniform":
        return 1.0 - rng.random(n)
    if dist == "powerlaw":
        w = np.arange(1, n + 1, dtype=np.float64) ** -s
        return rng.permutation(w)
    raise ValueError(f"unknown distribution {dist!r}")


DISTS = [("uniform", 0.0), ("powerlaw", 0.5), ("powerlaw", 1.0), ("powerlaw", 2.0)]


def mutate_alias(t: alias.AliasTable) -> alias.AliasTable:
    """Off-by-one fault: the bucket lending the most mass points at the
    next item instead of its real alias."""
    b = t.buckets.copy()
    if t.n > 1:
        r = int(np.argmax(t.bucket_weight - b["share"]))
        b["alias"][r] = (b["alias"][r] + 1) % t.n
    return alias.AliasTable(b, t.total)


# --- 1: implied masses -----------------------------------------------------------

def structural_fixtures(seed: int):
    rng = np.random.default_rng([seed, 1])
    sizes = [1 + i % 64 for i in range(160)] + [1000] * 30 + [100_000] * 10
    for i, n in enumerate(sizes):
        dist, s = DISTS[i % len(DISTS)]
        yield f"{dist}{s:g}/n={n}", make_weights(dist, s, n, rng)


@_timed(1, "implied masses of every builder equal w_i (rel 1e-9)", 30.0)
def criterion_1(seed: int = DEFAULT_SEED, mutate: bool = False, scale: float = 1.0):
    fixtures = list(structural_fixtures(seed))
    if scale < 1.0:
        fixtures = fixtures[:: max(1, int(1 / scale))]
    bad: list[str] = []
    checked = 0
    worst = 0.0
    for name, w in fixtures:
        wt = WeightTable.from_weights(w)
        n = wt.n
        builds = [("vose", alias.build_vose(wt)), ("sweep", alias.build_sweep(wt))]
        for p in (1, 2, 4, 8):
            t, trace = alias.build_psa(wt, p, debug=True)
            if trace.writes.max(initial=0) > 1:
                bad.append(f"{name}:psa{p}:double-write")
            builds.append((f"psa{p}", t))
        for g in sorted({1, min(4, n), n}):
            for base in ("vose", "sweep"):
                builds.append((f"2lvl-{base}-g{g}", twolevel.build_two_level(wt, g, base)))
        builds.append(("compressed", compressed.build_compressed(wt)))
        if mutate:
            builds[0] = ("vose-mutated", mutate_alias(builds[0][1]))
        for label, t in builds:
            m = implied_masses(t)
            checked += 1
            worst = max(worst, float(np.max(np.abs(m - wt.weights) / wt.weights)))
            if not masses_match(m, wt.weights, 1e-9):
                bad.append(f"{name}:{label}")
    detail = f"{len(fixtures)} tables, {checked} structures, max rel err {worst:.2e}, {len(bad)} mismatches"
    if bad:
        detail += f" (first: {bad[0]})"
    return not bad, detail


# --- 2: WRS-1 chi-square ---------------------------------------------------------

def wrs1_fixtures(seed: int):
    rng = np.random.default_rng([seed, 2])
    fx = [("3111", np.array([3.0, 1, 1, 1])), ("uniform4", np.ones(4)), ("uniform8", np.ones(8)),
          ("skew", np.array([1.0, 1e-3, 1e-3, 5.0, 0.2]))]
    sizes = [16, 50, 100, 200, 500, 1000]
    i = 0
    while len(fx) < 20:
        dist, s = DISTS[i % len(DISTS)]
        n = sizes[i % len(sizes)]
        fx.append((f"{dist}{s:g}/n={n}", make_weights(dist, s, n, rng)))
        i += 1
    return fx


@_timed(2, "WRS-1 chi-square over 1e6 queries, 20 fixtures x 3 structures", 60.0)
def criterion_2(seed: int = DEFAULT_SEED, scale: float = 1.0):
    q = _trials(10**6, scale)
    fx = wrs1_fixtures(seed)
    tests = 3 * len(fx)
    root = RngStream(seed, 2)
    fails = []
    worst = 1.0
    for i, (name, w) in enumerate(fx):
        wt = WeightTable.from_weights(w)
        p = wt.weights / wt.total
        builder = [alias.build_vose, alias.build_sweep, lambda x: alias.build_psa(x, 4)][i % 3]
        runs = {
            "alias": alias.sample_many(builder(wt), q, root.child(3 * i)),
            "2lvl": twolevel.sample_two_level_many(twolevel.build_two_level(wt, min(4, wt.n)), q,
                                                   root.child(3 * i + 1)),
            "compressed": compressed.sample_compressed_many(compressed.build_compressed(wt), q,
                                                            root.child(3 * i + 2)),
        }
        for label, draws in runs.items():
            res = chi_square(np.bincount(draws, minlength=wt.n), p, ALPHA, tests) if wt.n > 1 else None
            if res is not None:
                worst = min(worst, res.pvalue)
                if not res.passed:
                    fails.append(f"{name}:{label}")
    detail = f"{tests} tests at alpha={ALPHA}/{tests}, min p={worst:.3g}, {len(fails)} failures"
    if fails:
        detail += f" ({', '.join(fails[:3])})"
    return not fails, detail


# --- 3: WRS-R oracle -------------------------------------------------------------

def _encode_rows(mat: np.ndarray, k: int) -> np.ndarray:
    base = (k + 1) ** np.arange(mat.shape[1])
    return mat @ base


@_timed(3, "WRS-R multisets match the multinomial oracle (n,k <= 5)", 120.0)
def criterion_3(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**6, scale)
    rng = np.random.default_rng([seed, 3])
    root = RngStream(seed, 3)
    cases = [(n, k) for n in range(1, 6) for k in range(1, 6)]
    tests = 2 * sum(1 for n, _ in cases if n > 1)
    fails, conserve = [], True
    worst = 1.0
    for ci, (n, k) in enumerate(cases):
        w = 0.1 + rng.random(n) * (1 + 10 * rng.random())
        gs = outsens.build_grouped(w)
        dist = enumerate_multinomial(w, k)
        codes = {o: int(np.dot(o, (k + 1) ** np.arange(n))) for o in dist.outcomes}
        for dedup in (True, False):
            mat, _ = outsens.sample_replacement_repeated(gs, k, trials, root.child(2 * ci + dedup), dedup)
            conserve &= bool(np.all(mat.sum(axis=1) == k))
            enc = _encode_rows(mat, k)
            if n == 1:
                if not np.all(mat[:, 0] == k):
                    fails.append(f"n=1,k={k}")
                continue
            uniq, cnt = np.unique(enc, return_counts=True)
            known = set(codes.values())
            if not set(uniq.tolist()) <= known:
                fails.append(f"n={n},k={k},dedup={dedup}:impossible outcome")
                continue
            lookup = dict(zip(uniq.tolist(), cnt.tolist()))
            obs = [lookup.get(codes[o], 0) for o in dist.outcomes]
            res = chi_square(obs, dist.vector(), ALPHA, tests)
            worst = min(worst, res.pvalue)
            if not res.passed:
                fails.append(f"n={n},k={k},{'OS' if dedup else 'OS-ND'}")
    detail = (f"{len(cases)} fixtures x OS/OS-ND, {trials} trials each, min p={worst:.3g}, "
              f"conservation {'held' if conserve else 'VIOLATED'}, {len(fails)} failures")
    if fails:
        detail += f" ({', '.join(fails[:3])})"
    return conserve and not fails, detail


# --- 4: unique-count estimate bounds ---------------------------------------------

def sandwich_fixtures(seed: int):
    rng = np.random.default_rng([seed, 4])
    out = []
    for i in range(20):
        kind = i % 5
        if kind == 0:
            w = 1.0 - rng.random(64)
        elif kind == 1:
            w = make_weights("powerlaw", [0.5, 1.0, 2.0][i % 3], 64, rng)
        elif kind == 2:
            w = rng.lognormal(0.0, 2.0, 64)
        elif kind == 3:
            w = 2.0 ** rng.uniform(0, 20, 64)
        else:
            w = np.concatenate([np.full(4, 50.0), 1.0 - rng.random(60)])
        out.append(w)
    return out


ELLS = [1 << j for j in range(9)]


@_timed(4, "E[X] within [(1-1/e)t - 4sd, t + 4sd]; group t within 2x of item t", 60.0)
def criterion_4(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**5, scale)
    root = RngStream(seed, 4)
    sandwich_fail, factor_fail = [], []
    worst_ratio = 0.0
    for fi, w in enumerate(sandwich_fixtures(seed)):
        gs = outsens.build_grouped(w)
        for li, ell in enumerate(ELLS):
            _, distinct = outsens.sample_replacement_repeated(gs, ell, trials, root.child(fi * 16 + li),
                                                              dedup=True, dense=False)
            mean = distinct.mean()
            sd = distinct.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
            t = noreplace.t_exact(w, ell)
            slack = 4 * sd + 1e-9 * t
            if not ((1 - E_INV) * t - slack <= mean <= t + slack):
                sandwich_fail.append(f"f{fi},l={ell}: {mean:.3f} vs t={t:.3f}")
        for ell in range(1, 1025):
            t = noreplace.t_exact(w, ell)
            tg = noreplace.estimate_t(gs, ell)
            worst_ratio = max(worst_ratio, tg / t)
            if not (t * (1 - 1e-12) <= tg <= 2 * t * (1 + 1e-12)):
                factor_fail.append(f"f{fi},l={ell}: group {tg:.3f} vs item {t:.3f}")
    detail = (f"20 fixtures x {len(ELLS)} ell, {trials} trials: {len(sandwich_fail)} sandwich failures; "
              f"group/item t ratio max {worst_ratio:.3f} over ell 1..1024, {len(factor_fail)} failures")
    fails = sandwich_fail + factor_fail
    if fails:
        detail += f" ({fails[0]})"
    return not fails, detail


# --- 5: WRS-N oracle -------------------------------------------------------------

def _wrsn_cases():
    return [(n, k) for n in range(1, 7) for k in range(1, min(3, n) + 1)]


@_timed(5, "WRS-N subsets match enumeration (n<=6, k<=3); rejection rate <= 0.5+4sd", 120.0)
def criterion_5(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**6, scale)
    rng = np.random.default_rng([seed, 5])
    root = RngStream(seed, 5)
    cases = _wrsn_cases()
    tests = sum(1 for n, k in cases if k < n)
    fails = []
    worst = 1.0
    max_rate = 0.0
    oracle_gap = 0.0
    for ci, (n, k) in enumerate(cases):
        w = 0.1 + rng.random(n) * (1 + 10 * rng.random())
        gs = outsens.build_grouped(w)
        dist = enumerate_wrsn(w, k)
        oracle_gap = max(oracle_gap, max(abs(p - wrsn_closed_form(w, s)) for s, p in dist.probs.items()))
        if k == n:
            for r in range(200):
                out = noreplace.sample_no_replacement(gs, k, root.child(1000 + 200 * ci + r))
                if sorted(out.tolist()) != list(range(n)):
                    fails.append(f"n={n},k={k}:not full set")
                    break
            continue
        samples, batches = noreplace.sample_no_replacement_repeated(gs, k, trials, root.child(ci))
        srt = np.sort(samples, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]) if k > 1 else False:
            fails.append(f"n={n},k={k}:duplicate item")
            continue
        masks = np.bitwise_or.reduce(np.left_shift(1, samples), axis=1)
        cnt = np.bincount(masks, minlength=1 << n)
        codes = [sum(1 << i for i in s) for s in dist.outcomes]
        if cnt.sum() != cnt[codes].sum():
            fails.append(f"n={n},k={k}:impossible subset")
            continue
        res = chi_square(cnt[codes], dist.vector(), ALPHA, tests)
        worst = min(worst, res.pvalue)
        if not res.passed:
            fails.append(f"n={n},k={k}")
        rate = float(np.mean(batches > 1))
        max_rate = max(max_rate, rate)
        if rate > 0.5 + 4 * math.sqrt(0.25 / trials):
            fails.append(f"n={n},k={k}:rejection rate {rate:.3f}")
    if oracle_gap > 1e-12:
        fails.append(f"enumeration paths disagree by {oracle_gap:.2e}")
    detail = (f"{len(cases)} fixtures, {trials} trials, min p={worst:.3g}, max rejection rate {max_rate:.3f}, "
              f"oracle paths agree to {oracle_gap:.1e}, {len(fails)} failures")
    if fails:
        detail += f" ({', '.join(fails[:3])})"
    return not fails, detail


# --- 6: permutations -------------------------------------------------------------

def _is_perm_rows(mat: np.ndarray) -> bool:
    return bool(np.all(np.sort(mat, axis=1) == np.arange(mat.shape[1])))


@_timed(6, "WRP permutation property, order oracle, occupancy <= 1/e+3sd, bucket/exact agreement", 120.0)
def criterion_6(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**6, scale)
    rng = np.random.default_rng([seed, 6])
    root = RngStream(seed, 6)
    fails = []
    order_fx = [np.array([2.0, 1.0]), np.ones(3), np.array([5.0, 1.0, 0.5]), np.array([1.0, 2.0, 3.0, 4.0]),
                np.array([2.0**30, 1.0, 7.0, 0.01]), 0.1 + rng.random(4)]
    worst = 1.0
    perm_ok = True
    for fi, w in enumerate(order_fx):
        mat = permute.weighted_permutation_repeated(w, trials, root.child(fi))
        perm_ok &= _is_perm_rows(mat)
        dist = enumerate_ordered(w, w.size)
        n = w.size
        enc = mat @ (n ** np.arange(n))
        cnt = np.bincount(enc, minlength=n**n)
        codes = [int(np.dot(o, n ** np.arange(n))) for o in dist.outcomes]
        res = chi_square(cnt[codes], dist.vector(), ALPHA, len(order_fx))
        worst = min(worst, res.pvalue)
        if not res.passed:
            fails.append(f"order n={n} f{fi}")
    # direct calls with the presence check on
    for r in range(_trials(300, scale)):
        n = int(rng.integers(1, 3000))
        w = 2.0 ** rng.uniform(0, rng.uniform(0, 40), n)
        try:
            permute.weighted_permutation(w, root.child(100 + r), workers=1 + r % 3, check=True)
        except AssertionError:
            perm_ok = False
    occ = []
    for oi, w in enumerate([np.ones(10_000), 0.01 + rng.random(10_000),
                            np.concatenate([[2.0**30], 2.0 ** rng.uniform(0, 30, 9_999)])]):
        st = permute.bucket_occupancy_audit(w, _trials(30, scale), root.child(500 + oi))
        occ.append(st)
        if st.mean > E_INV + 3 * st.sd:
            fails.append(f"occupancy {st.mean:.3f}")
        if st.clamped > 2 + 4 * math.sqrt(2.0 / st.trials):
            fails.append(f"clamped {st.clamped:.2f}")
    agree = 0
    inst = _trials(10**4, scale)
    for r in range(inst):
        n = int(rng.integers(2, 200))
        w = 2.0 ** rng.uniform(0, rng.uniform(0, 30), n)
        pk = permute.permutation_keys(w, root.child(10_000 + r))
        order = np.empty(n, np.int64)
        permute._bucket_sort(pk.keys, pk.buckets, pk.K, order, np.empty(pk.K + 3, np.int64))
        agree += bool(np.array_equal(order, np.argsort(pk.keys, kind="stable")))
    if agree != inst:
        fails.append(f"bucket order disagreed on {inst - agree} instances")
    if not perm_ok:
        fails.append("non-permutation output")
    occ_txt = ", ".join(f"{o.mean:.3f}+-{o.sd:.3f}" for o in occ)
    detail = (f"order chi-square min p={worst:.3g} ({len(order_fx)} fixtures x {trials}); occupancy {occ_txt} "
              f"(bound {E_INV:.3f}, peak {max(o.peak for o in occ):.3f}); clamped/perm "
              f"{max(o.clamped for o in occ):.2f}; bucket=exact order {agree}/{inst}; "
              f"permutations {'ok' if perm_ok else 'BROKEN'}")
    if fails:
        detail += f" | {', '.join(fails[:3])}"
    return not fails, detail


# --- 7: subsets ------------------------------------------------------------------

FOUR_SIGMA = 2 * stats.norm.sf(4.0)


def marginal_outliers(hits_per_item: np.ndarray, trials: int, w: np.ndarray) -> np.ndarray:
    """Items whose hit count falls outside the two-sided 4-sigma level.

    Exact binomial tails judge items with tiny ``w`` (a handful of expected
    hits) at the same level as the rest, and the level is shared among the
    random items of one run so a run with hundreds of items keeps a
    family-wise false-alarm rate of ``2 * Phi(-4)``.
    """
    x = hits_per_item
    lo = stats.binom.cdf(x, trials, w)
    hi = stats.binom.sf(x - 1, trials, w)
    p = np.minimum(1.0, 2 * np.minimum(lo, hi))
    random_items = max(1, int(np.count_nonzero(w < 1.0)))
    return np.flatnonzero(p < FOUR_SIGMA / random_items)

@_timed(7, "WRS-S marginals, E|S|=W, pairwise covariance ~ 0, worker invariance (4sd)", 60.0)
def criterion_7(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**5, scale)
    rng = np.random.default_rng([seed, 7])
    root = RngStream(seed, 7)
    big = np.concatenate([[1.0, 0.5, 0.25], 2.0 ** -rng.uniform(0, 12, 150), rng.random(45) * 1e-4,
                          np.full(2, 2.0**-20)])
    fixtures = [("mixed", np.array([0.9, 0.3, 0.01, 2.0**-20])), ("half", np.full(20, 0.5)),
                ("spread", big), ("sure", np.array([1.0, 1e-9]))]
    fails = []
    zmax = 0.0
    for fi, (name, w) in enumerate(fixtures):
        ss = subset.build_subset(w, 1)
        hits, sizes = subset.sample_subset_repeated(ss, trials, root.child(fi))
        counts = hits.sum(axis=0, dtype=np.int64)
        freq = counts / trials
        sd = np.sqrt(w * (1 - w) / trials)
        z = np.abs(freq - w) / np.where(sd > 0, sd, 1.0)
        zmax = max(zmax, float(z[w >= 0.01].max(initial=0.0)))
        out = marginal_outliers(counts, trials, w)
        if out.size:
            fails.append(f"{name}: marginal of item {out[0]} is {freq[out[0]]:.3g} vs {w[out[0]]:.3g}")
        s_sd = math.sqrt(np.sum(w * (1 - w)) / trials)
        if abs(sizes.mean() - w.sum()) > 4 * s_sd + 1e-12:
            fails.append(f"{name}: E|S| {sizes.mean():.4f} vs {w.sum():.4f}")
        if name == "spread":
            cand = np.flatnonzero((w > 0.01) & (w < 1.0))
            pairs = [tuple(rng.choice(cand, 2, replace=False)) for _ in range(50)]
            x = hits.astype(np.float64)
            for i, j in pairs:
                cov = np.mean(x[:, i] * x[:, j]) - freq[i] * freq[j]
                csd = math.sqrt(w[i] * (1 - w[i]) * w[j] * (1 - w[j]) / trials)
                if abs(cov) > 4 * csd:
                    fails.append(f"cov({i},{j})={cov:.2e}")
            # same distribution for any worker partition
            hist = []
            for p in (1, 2, 8):
                ssp = subset.build_subset(w, p)
                hp, sp = subset.sample_subset_repeated(ssp, trials, root.child(100 + p))
                if marginal_outliers(hp.sum(axis=0, dtype=np.int64), trials, w).size:
                    fails.append(f"workers={p}: marginal off")
                hist.append(np.bincount(sp, minlength=200)[:200])
                live = np.concatenate([subset.sample_subset(ssp, root.child(1000 * p + r))
                                       for r in range(_trials(2000, scale))])
                reps = _trials(2000, scale)
                if abs(live.size / reps - w.sum()) > 4 * math.sqrt(np.sum(w * (1 - w)) / reps):
                    fails.append(f"workers={p}: threaded E|S| off")
            table = np.array(hist)
            table = table[:, table.sum(axis=0) >= 15]
            _, pval, _, _ = stats.chi2_contingency(table)
            if pval < ALPHA:
                fails.append(f"|S| histogram differs across workers (p={pval:.2g})")
    detail = f"{len(fixtures)} fixtures x {trials} trials, max marginal z={zmax:.2f} (w >= 0.01), exact binomial tails at family-wise 4 sigma, 50 pairs, workers 1/2/8"
    if fails:
        detail += f" | {len(fails)} failures: {', '.join(fails[:3])}"
    return not fails, detail


# --- 8: reservoir ----------------------------------------------------------------

@_timed(8, "WRS-B matches WRS-N oracle, (p,b)-invariant, insertions <= bound+4sd", 180.0)
def criterion_8(seed: int = DEFAULT_SEED, scale: float = 1.0):
    trials = _trials(10**6, scale)
    rng = np.random.default_rng([seed, 8])
    root = RngStream(seed, 8)
    cases = _wrsn_cases()
    grid = [(p, b) for p in (1, 2, 4) for b in (1, 2, 5)]
    tests = len(cases) + len(grid)
    fails = []
    worst = 1.0

    def check(w, k, samples, label):
        nonlocal worst
        n = w.size
        dist = enumerate_wrsn(w, k)
        masks = np.bitwise_or.reduce(np.left_shift(1, samples), axis=1)
        cnt = np.bincount(masks, minlength=1 << n)
        codes = [sum(1 << i for i in s) for s in dist.outcomes]
        if cnt.sum() != cnt[codes].sum():
            fails.append(f"{label}: impossible subset")
            return
        if len(codes) == 1:
            return
        res = chi_square(cnt[codes], dist.vector(), ALPHA, tests)
        worst = min(worst, res.pvalue)
        if not res.passed:
            fails.append(label)

    for ci, (n, k) in enumerate(cases):
        w = 0.1 + rng.random(n) * (1 + 10 * rng.random())
        samples, _ = reservoir.reservoir_repeated(w, k, 1, 1, trials, root.child(ci))
        check(w, k, samples, f"n={n},k={k}")
    w = 0.1 + rng.random(6) * 5
    for gi, (p, b) in enumerate(grid):
        samples, _ = reservoir.reservoir_repeated(w, 3, p, b, _trials(10**5, scale), root.child(100 + gi))
        check(w, 3, samples, f"p={p},b={b}")
    # the threaded class against the same oracle, fewer runs
    res_runs = _trials(3000, scale)
    live = np.array([reservoir.stream_reservoir(w, 3, 2, 2, root.child(200 + r)).sample() for r in range(res_runs)])
    dist = enumerate_wrsn(w, 3)
    masks = np.bitwise_or.reduce(np.left_shift(1, live), axis=1)
    cnt = np.bincount(masks, minlength=64)
    codes = [sum(1 << i for i in s) for s in dist.outcomes]
    live_res = chi_square(cnt[codes], dist.vector(), ALPHA, 1)
    if not live_res.passed or cnt.sum() != cnt[codes].sum():
        fails.append("threaded reservoir")

    n, k, p, b, runs = 100_000, 1000, 4, 10, 2
    ins_w = 1.0 - rng.random(n)
    _, ins = reservoir.reservoir_repeated(ins_w, k, p, b, runs, root.child(300))
    bound = reservoir.insertion_bound(n, k, p)
    sd = math.sqrt(bound / (p * runs))
    mean_ins = float(ins.mean())
    if mean_ins > bound + 4 * sd:
        fails.append(f"insertions {mean_ins:.1f} > {bound:.1f}+4sd")
    detail = (f"{len(cases)} oracle fixtures x {trials}, {len(grid)} (p,b) configs, min p={worst:.3g}; "
              f"mean insertions/PE {mean_ins:.1f} vs bound {bound:.1f} + 4sd ({bound + 4 * sd:.1f})")
    if fails:
        detail += f" | {', '.join(fails[:3])}"
    return not fails, detail


# --- 9: scaling (soft) -------------------------------------------------------------

def _best_time(fn, reps: int = 3) -> float:
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


@_timed(9, "4-worker speedups at n=1e7 (soft gate)", None, soft=True)
def criterion_9(seed: int = DEFAULT_SEED, scale: float = 1.0, workers: int = 4):
    import os

    n = _trials(10**7, scale)
    w = make_weights("uniform", 0.0, n, np.random.default_rng([seed, 9]))
    wt = WeightTable.from_weights(w)
    table = alias.build_psa(wt, 1)
    alias.sample_many(table, 1000, RngStream(seed, 9), workers)  # warm up the pool
    rows = []
    notes = []
    targets = [
        ("psa build", lambda p: alias.build_psa(wt, p), 1.5),
        ("2lvl-sweep build", lambda p: twolevel.build_two_level(wt, None, "sweep", p), 1.5),
        ("alias queries", lambda p: alias.sample_many(table, n, RngStream(seed, 9), p), 2.0),
    ]
    ok = True
    for name, fn, need in targets:
        t1 = _best_time(lambda: fn(1))
        tp = _best_time(lambda: fn(workers))
        speedup = t1 / tp
        rows.append(f"{name} {speedup:.2f}x (need {need}x)")
        if speedup < need:
            ok = False
            notes.append(f"{name}: speedup {speedup:.2f}x below {need}x on {os.cpu_count()} CPU(s)")
    return ok, f"{workers} workers on {os.cpu_count()} CPU(s): " + "; ".join(rows), notes


# --- 10: output sensitivity --------------------------------------------------------

@_timed(10, "s_out/k decreases in k; query time sublinear in k (power law s=2, n=1e6)", None)
def criterion_10(seed: int = DEFAULT_SEED, scale: float = 1.0):
    n = _trials(10**6, scale)
    w = make_weights("powerlaw", 2.0, n, np.random.default_rng([seed, 10]))
    gs = outsens.build_grouped(w)
    ks = [10**3, 10**4, 10**5, 10**6]
    ratios, times = [], []
    for i, k in enumerate(ks):
        s = outsens.sample_replacement(gs, k, RngStream(seed, 10).child(i))
        ratios.append(len(s) / k)
        times.append(_best_time(lambda: outsens.sample_replacement(gs, k, RngStream(seed, 11)), 5))
    mono = all(a > b for a, b in zip(ratios, ratios[1:]))
    sub = all(t2 / t1 < k2 / k1 for t1, t2, k1, k2 in zip(times, times[1:], ks, ks[1:]))
    detail = ("s_out/k " + ", ".join(f"{r:.4f}" for r in ratios) + "; time ms "
              + ", ".join(f"{t * 1e3:.2f}" for t in times))
    return mono and sub, detail


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}

SUITES = {
    "masses": [1],
    "chisq": [2, 7],
    "oracle": [3, 5, 6, 8],
    "bounds": [4, 9, 10],
    "all": list(CRITERIA),
}


def run_suite(name: str, seed: int = DEFAULT_SEED, scale: float = 1.0, mutate: bool = False) -> list[Outcome]:
    out = []
    for c in SUITES[name]:
        kwargs = {"seed": seed, "scale": scale}
        if c == 1:
            kwargs["mutate"] = mutate
        out.append(CRITERIA[c](**kwargs))
    return out
