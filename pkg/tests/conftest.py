import sys
from pathlib import Path

import pytest

from shardecon.config import load_config

ROOT = Path(__file__).resolve().parents[1]
DESK = ROOT / "configs" / "desk.cfg"


@pytest.fixture(scope="session")
def small_cfg():
    """The desk economy shrunk to something a unit test can afford."""
    return load_config(DESK).replace(population=150, intervals=120)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance verdicts")
        for line in sorted(lines, key=lambda text: int(text.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
