"""Full verification suite: one test per criterion, each printing its
pass/fail line with the measured values and pinned tolerance.

The report lines bypass pytest's capture so that a plain `pytest -v` log
carries one line per criterion; the same checks run via the CLI:
`sievesim verify --suite all --seed 20260811`.
"""

import sys

import pytest

from sievesim import acceptance

SEED = acceptance.DEFAULT_SEED


@pytest.mark.parametrize("number", sorted(acceptance.SUITES["all"]))
def test_criterion(number):
    result = acceptance.run_criterion(number, seed=SEED)
    print(result.report_line(), file=sys.__stdout__)
    assert result.passed, result.report_line()
