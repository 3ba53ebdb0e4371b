"""Acceptance gate: every measured claim the package makes, end to end.

Runs the built-in suite once (sweep members threaded) and emits one
pass/fail line per criterion straight to the terminal, bypassing
capture, so the checklist is visible in any pytest log.
"""

import pytest

from bdlab.verification import _CRITERIA, format_result, run_acceptance

_NAMES = [name for _, name, _ in _CRITERIA]


@pytest.fixture(scope="module")
def results():
    return run_acceptance(jobs=4)


@pytest.mark.parametrize("index", range(1, len(_CRITERIA) + 1), ids=_NAMES)
def test_criterion(index, results, capsys):
    result = results[index - 1]
    assert result.index == index
    with capsys.disabled():
        print(format_result(result))
    assert result.passed, result.detail


def test_every_criterion_covered(results):
    assert [r.index for r in results] == list(range(1, 11))
    assert [r.name for r in results] == _NAMES
