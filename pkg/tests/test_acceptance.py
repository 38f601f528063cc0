"""Acceptance suite: one printed pass/fail line per criterion."""

import pytest

from oscilla.acceptance import CRITERIA, Context, run_criterion


@pytest.fixture(scope="module")
def ctx():
    # shared so the solver-integrity check audits the tracks of the earlier criteria
    return Context(seed=0)


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA],
                         ids=[c[1].lower().replace(" ", "_") for c in CRITERIA])
def test_criterion(number, ctx, capsys):
    result = run_criterion(number, ctx)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
