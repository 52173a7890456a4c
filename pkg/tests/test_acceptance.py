"""Acceptance criteria A1-A8, each at its stated tolerance.

Every criterion prints one ``A<k> PASS|FAIL ...`` line, even under output capture.
"""

import pytest

from spraylab import verification

CRITERIA = sorted(verification.SUITES.items(), key=lambda kv: kv[1][0])


@pytest.mark.parametrize("name", [name for name, _ in CRITERIA], ids=[code for _, (code, _) in CRITERIA])
def test_criterion(name, capsys):
    result = verification.run_suite(name)
    with capsys.disabled():
        print(f"\n{result.summary_line()}")
    failing = [c.to_record() for c in result.checks if not c.passed]
    assert result.passed, failing
