"""Acceptance gate: every exit criterion at its stated tolerance.

Each test prints its own PASS/FAIL line; run with `pytest -s
tests/test_acceptance.py` to see them. The same checks back the
`gderiv paper-suite` command.
"""
import pytest

from gderiv import acceptance

CTX = acceptance.SuiteContext()


@pytest.mark.parametrize("crit", acceptance.CRITERIA,
                         ids=[f"c{c.cid:02d}-{c.key}" for c in acceptance.CRITERIA])
def test_criterion(crit):
    result = acceptance.run_criterion(crit, CTX)
    print(f"\n[{result.status}] criterion {result.cid} ({result.key}): "
          f"{result.detail}")
    assert not result.skipped, f"criterion {result.cid} unexpectedly skipped"
    assert result.passed, (f"criterion {result.cid} ({result.key}) failed: "
                           f"{result.detail}")
