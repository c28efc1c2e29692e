"""The eight acceptance criteria, each at its own time limit.

Run directly (``python tests/test_acceptance.py``) or through pytest; either
way one [PASS]/[FAIL] line is printed per criterion.
"""

import sys

import pytest

from finitary.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number, suite", [(n, s) for n, s, *_ in CRITERIA],
                         ids=[s for _, s, *_ in CRITERIA])
def test_criterion(number, suite, capsys):
    r = run_criterion(number, seed=0)
    with capsys.disabled():
        print("\n" + r.line())
        for f in r.failures[:10]:
            print("    " + f)
    assert r.cases > 0
    assert not r.failures, r.failures
    assert r.seconds < r.limit, f"{r.seconds:.1f}s exceeds the {r.limit:.0f}s limit"
    assert r.passed


def test_criteria_are_seed_independent():
    # the randomized criteria must pass for other seeds too
    for key in ("reconstruction", "fields"):
        r = run_criterion(key, seed=12345)
        assert r.passed, r.failures


if __name__ == "__main__":
    results = [run_criterion(n) for n, *_ in CRITERIA]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
