"""``wrs`` command line: generate weight files, time builds and queries, and
run the acceptance suites.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import math
import struct
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import alias, compressed, noreplace, outsens, permute, reservoir, subset, twolevel
from .core import RngStream, WeightTable, default_seed
from .verify import ALPHA, chi_square, implied_masses, masses_match

MAGIC = b"WRS1"
HEADER = ["algorithm", "n", "k", "dist", "s", "threads", "rep", "phase", "time_ns", "throughput", "s_out",
          "verified"]
ALGOS = ["vose", "sweep", "psa", "2lvl-classic", "2lvl-sweep", "compressed", "grouped", "subset"]
PROBLEMS = ["one", "with", "without", "permute", "subset", "reservoir"]
SINGLE_ALGOS = ["vose", "sweep", "psa", "2lvl-classic", "2lvl-sweep", "compressed"]
WARMUP = 256


class WeightFileError(Exception):
    """Unreadable, unwritable or malformed weight file."""


def write_weights(path: str | Path, weights: np.ndarray) -> None:
    w = np.ascontiguousarray(weights, dtype="<f8")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", w.size))
            fh.write(w.tobytes())
    except OSError as e:
        raise WeightFileError(f"cannot write {path}: {e.strerror or e}") from e


def read_weights(path: str | Path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise WeightFileError(f"cannot read {path}: {e.strerror or e}") from e
    if len(data) < 12 or data[:4] != MAGIC:
        raise WeightFileError(f"{path}: not a WRS1 weight file")
    (count,) = struct.unpack_from("<Q", data, 4)
    if len(data) - 12 != 8 * count:
        raise WeightFileError(f"{path}: header declares {count} weights but payload holds "
                              f"{(len(data) - 12) / 8:g}")
    w = np.frombuffer(data, dtype="<f8", offset=12).astype(np.float64)
    if count == 0 or not np.all(np.isfinite(w) & (w > 0)):
        raise WeightFileError(f"{path}: weights must be positive and finite")
    return w


def generate(dist: str, s: float, n: int, seed: int) -> np.ndarray:
    gen = RngStream(seed, 0).gen
    if dist == "uniform":
        return 1.0 - gen.random(n)
    return gen.permutation(np.arange(1, n + 1, dtype=np.float64) ** -s)


# --- build ------------------------------------------------------------------------

def build_structure(algo: str, wt: WeightTable, threads: int):
    if algo == "vose":
        return alias.build_vose(wt)
    if algo == "sweep":
        return alias.build_sweep(wt)
    if algo == "psa":
        return alias.build_psa(wt, threads)
    if algo == "2lvl-classic":
        return twolevel.build_two_level(wt, None, "vose", threads)
    if algo == "2lvl-sweep":
        return twolevel.build_two_level(wt, None, "sweep", threads)
    if algo == "compressed":
        return compressed.build_compressed(wt, threads)
    if algo == "grouped":
        return outsens.build_grouped(wt, threads)
    if algo == "subset":
        return subset.build_subset(_subset_probs(wt.weights, 1), threads)
    raise ValueError(f"unknown algorithm {algo!r}")


def check_structure(algo: str, t, wt: WeightTable) -> bool:
    if algo == "grouped":
        return bool(t.audit())
    if algo == "subset":
        return bool(np.isclose(t.prefix[-1], t.sorted_w.sum()))
    return masses_match(implied_masses(t), wt.weights)


def _subset_probs(w: np.ndarray, k: int) -> np.ndarray:
    """Inclusion probabilities ``min(1, k w / W)``."""
    return np.minimum(1.0, k * w / w.sum())


# --- sample -------------------------------------------------------------------------

def _single_sampler(algo: str, wt: WeightTable, threads: int):
    t = build_structure(algo, wt, threads)
    if isinstance(t, alias.AliasTable):
        return lambda q, st: alias.sample_many(t, q, st, threads)
    if isinstance(t, twolevel.TwoLevelTable):
        return lambda q, st: twolevel.sample_two_level_many(t, q, st, threads)
    return lambda q, st: compressed.sample_compressed_many(t, q, st, threads)


def run_query(problem: str, ctx: dict, k: int, stream: RngStream, threads: int):
    """One timed unit of work.  Returns ``(outputs, s_out, verified)``."""
    w = ctx["weights"]
    n = w.size
    if problem == "one":
        draws = ctx["single"](k, stream)
        ok = bool(draws.size == k and draws.min() >= 0 and draws.max() < n)
        if ok and n > 1 and k >= 5 * min(n, 1000):
            ok = chi_square(np.bincount(draws, minlength=n), w / w.sum(), ALPHA).passed
        return k, int(np.unique(draws).size), ok
    if problem == "with":
        ms = outsens.sample_replacement(ctx["grouped"], k, stream, workers=threads)
        return k, len(ms), bool(ms.total == k and np.unique(ms.items).size == len(ms))
    if problem == "without":
        out = noreplace.sample_no_replacement(ctx["grouped"], k, stream, workers=threads)
        return k, int(out.size), bool(out.size == k and np.unique(out).size == k)
    if problem == "permute":
        out = permute.weighted_permutation(ctx["table"], stream, workers=threads)
        return n, int(out.size), bool(np.array_equal(np.sort(out), np.arange(n)))
    if problem == "subset":
        out = subset.sample_subset(ctx["subset"], stream, workers=threads)
        return int(out.size), int(out.size), bool(np.unique(out).size == out.size)
    if problem == "reservoir":
        res = reservoir.stream_reservoir(w, k, threads, ctx["batch"], stream, threads)
        out = res.sample()
        return n, int(out.size), bool(out.size == min(k, n) and np.unique(out).size == out.size)
    raise ValueError(f"unknown problem {problem!r}")


def prepare(problem: str, w: np.ndarray, algo: str | None, k: int, threads: int, batch: int) -> dict:
    wt = WeightTable.from_weights(w)
    ctx = {"weights": wt.weights, "table": wt, "batch": batch}
    if problem == "one":
        ctx["single"] = _single_sampler(algo or "psa", wt, threads)
    elif problem in ("with", "without"):
        ctx["grouped"] = outsens.build_grouped(wt, threads)
    elif problem == "subset":
        ctx["subset"] = subset.build_subset(_subset_probs(wt.weights, k), threads)
    return ctx


def problem_label(problem: str, algo: str | None) -> str:
    return {"one": algo or "psa", "with": "grouped", "without": "grouped-noreplace", "permute": "permute",
            "subset": "subset", "reservoir": "reservoir"}[problem]


# --- CSV ----------------------------------------------------------------------------

class Rows:
    def __init__(self, path: str | None):
        self.path = path
        self.fh = None

    def __enter__(self):
        if self.path and self.path != "-":
            try:
                self.fh = open(self.path, "w", newline="")
            except OSError as e:
                raise WeightFileError(f"cannot write {self.path}: {e.strerror or e}") from e
            out = self.fh
        else:
            out = sys.stdout
        self.writer = csv.writer(out, lineterminator="\n")
        self.writer.writerow(HEADER)
        return self

    def add(self, algorithm, n, k, dist, s, threads, rep, phase, ns, outputs, s_out, verified):
        tput = outputs / (ns * 1e-9) if ns > 0 else math.inf
        self.writer.writerow([algorithm, n, k, dist, repr(float(s)), threads, rep, phase, ns, f"{tput:.6g}",
                              s_out, int(bool(verified))])

    def __exit__(self, *exc):
        if self.fh:
            self.fh.close()


# --- commands -----------------------------------------------------------------------

def cmd_gen(a) -> int:
    if a.n < 1:
        raise UsageError("--n must be >= 1")
    if a.dist == "powerlaw" and a.s < 0:
        raise UsageError("--s must be >= 0 for powerlaw")
    if not a.out:
        raise UsageError("gen needs --out")
    write_weights(a.out, generate(a.dist, a.s, a.n, a.seed))
    return 0


def cmd_build(a) -> int:
    if not a.algo:
        raise UsageError("build needs --algo")
    w = read_weights(_need_in(a))
    wt = WeightTable.from_weights(w)
    build_structure(a.algo, WeightTable.from_weights(w[:WARMUP]), a.threads)  # compile outside timing
    failed = False
    with Rows(a.csv) as rows:
        for rep in range(a.reps):
            t0 = time.perf_counter_ns()
            t = build_structure(a.algo, wt, a.threads)
            ns = time.perf_counter_ns() - t0
            ok = check_structure(a.algo, t, wt)
            failed |= not ok
            rows.add(a.algo, wt.n, 0, a.dist, a.s, a.threads, rep, "build", ns, wt.n, wt.n, ok)
            del t
    return 1 if failed else 0


def cmd_sample(a) -> int:
    if not a.problem:
        raise UsageError("sample needs --problem")
    if a.algo and a.problem == "one" and a.algo not in SINGLE_ALGOS:
        raise UsageError(f"--algo for problem 'one' must be one of {', '.join(SINGLE_ALGOS)}")
    w = read_weights(_need_in(a))
    n = w.size
    k = a.k if a.k is not None else (a.trials if a.problem == "one" else min(n, 1000))
    if k < 1:
        raise UsageError("--k must be >= 1")
    if a.problem == "without" and k > n:
        raise UsageError(f"--k={k} exceeds n={n} for sampling without replacement")
    small = w[:WARMUP]
    kw = min(k, small.size - (a.problem == "without" and small.size > 1))
    run_query(a.problem, prepare(a.problem, small, a.algo, kw, a.threads, a.batch), kw, RngStream(a.seed, 2),
              a.threads)  # compile outside timing
    ctx = prepare(a.problem, w, a.algo, k, a.threads, a.batch)
    root = RngStream(a.seed, 1)
    label = problem_label(a.problem, a.algo)
    failed = False
    with Rows(a.csv) as rows:
        for rep in range(a.reps):
            t0 = time.perf_counter_ns()
            outputs, s_out, ok = run_query(a.problem, ctx, k, root.child(rep), a.threads)
            ns = time.perf_counter_ns() - t0
            failed |= not ok
            rows.add(label, n, k, a.dist, a.s, a.threads, rep, "query", ns, outputs, s_out, ok)
    return 1 if failed else 0


def cmd_verify(a) -> int:
    from .suites import run_suite

    failed = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for out in run_suite(a.suite, a.seed, a.scale, a.mutate):
            print(out.line(), flush=True)
            for note in out.warnings:
                print(f"  warning: {note}", flush=True)
            failed |= not out.ok
    print("verification FAILED" if failed else "verification passed")
    return 1 if failed else 0


class UsageError(Exception):
    pass


def _need_in(a) -> str:
    if not a.inp:
        raise UsageError(f"{a.command} needs --in")
    return a.inp


def _positive(v: str) -> int:
    x = int(v)
    if x < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return x


def _seed(v: str) -> int:
    return int(v, 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wrs", description="Generate weight files, time builds and queries, and run the acceptance suites.",
        epilog="Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 I/O error.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="RNG seed (default: $WRS_SEED or 0xC0FFEE)")

    label = argparse.ArgumentParser(add_help=False)
    label.add_argument("--dist", choices=["uniform", "powerlaw"], default="uniform")
    label.add_argument("--s", type=float, default=0.0, help="power-law skew")

    g = sub.add_parser("gen", parents=[common, label], help="write a weight file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)

    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--in", dest="inp", help="weight file")
    io.add_argument("--threads", type=_positive, default=1)
    io.add_argument("--reps", type=_positive, default=1)
    io.add_argument("--csv", help="CSV output path (default stdout)")

    b = sub.add_parser("build", parents=[common, label, io], help="time structure construction")
    b.add_argument("--algo", choices=ALGOS)

    s = sub.add_parser("sample", parents=[common, label, io], help="time queries")
    s.add_argument("--problem", choices=PROBLEMS)
    s.add_argument("--algo", choices=ALGOS, help="structure for problem 'one' (default psa)")
    s.add_argument("--k", type=int, default=None, help="sample size (for 'one': queries per rep)")
    s.add_argument("--trials", type=_positive, default=10**6, help="queries per rep for 'one' when --k is unset")
    s.add_argument("--batch", type=_positive, default=10, help="reservoir mini-batch size per PE")

    v = sub.add_parser("verify", parents=[common], help="run acceptance suites")
    v.add_argument("--suite", choices=["masses", "oracle", "chisq", "bounds", "all"], default="all")
    v.add_argument("--scale", type=float, default=1.0, help="fraction of full trial counts")
    v.add_argument("--mutate", action="store_true", help="inject an off-by-one alias fault")
    return p


COMMANDS = {"gen": cmd_gen, "build": cmd_build, "sample": cmd_sample, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.seed is None:
        a.seed = default_seed()
    try:
        return COMMANDS[a.command](a)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"wrs {a.command}: error: {e}", file=sys.stderr)
        return 2
    except WeightFileError as e:
        print(f"wrs {a.command}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
