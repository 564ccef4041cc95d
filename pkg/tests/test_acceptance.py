"""Acceptance criteria at full size.

Each test prints one ``[PASS]``/``[FAIL]`` line (``[WARN]`` for the soft
scaling gate), independent of pytest's output capture.  Tolerances, trial
counts and runtime budgets live in ``wrs.suites``.
"""
import pytest

from wrs import suites
from wrs.core import DEFAULT_SEED


def report(outcome, capsys):
    with capsys.disabled():
        print("\n" + outcome.line(), flush=True)
        for note in outcome.warnings:
            print(f"  warning: {note}", flush=True)


@pytest.mark.parametrize("criterion", [c for c in suites.CRITERIA if c != 9])
def test_criterion(criterion, capsys):
    outcome = suites.CRITERIA[criterion](seed=DEFAULT_SEED)
    report(outcome, capsys)
    assert outcome.passed, outcome.detail
    assert outcome.in_budget, f"took {outcome.seconds:.1f}s, budget {outcome.budget:.0f}s"


def test_criterion_9_scaling_is_soft(capsys):
    outcome = suites.criterion_9(seed=DEFAULT_SEED)
    report(outcome, capsys)
    assert outcome.soft and outcome.ok


def test_mutation_is_caught(capsys):
    outcome = suites.criterion_1(seed=DEFAULT_SEED, mutate=True)
    with capsys.disabled():
        print(f"\n[{'PASS' if not outcome.passed else 'FAIL'}] fault injection: off-by-one alias "
              f"is rejected | {outcome.detail}", flush=True)
    assert not outcome.passed
