import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anonmet.qmat import TOL, configure  # noqa: E402


@pytest.fixture(autouse=True)
def _restore_tolerances():
    saved = dict(vars(TOL))
    yield
    configure(**saved)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
