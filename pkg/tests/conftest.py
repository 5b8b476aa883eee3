from __future__ import annotations

import pytest

# criterion number -> (passed, summary line); filled by test_acceptance
ACCEPTANCE_LINES: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n][1])


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
