from __future__ import annotations

import pytest

from helpers import ACCEPTANCE_LINES
from snackjack.core import Pack
from snackjack.solver import basic_strategy


@pytest.fixture(scope="session")
def bs39():
    """Basic-strategy policy of the 39-deck shoe, the fixed strategy of the closed forms."""
    return basic_strategy(Pack.decks(39)).policy()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
