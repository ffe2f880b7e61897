import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture(scope="session")
def report(request):
    """Record one acceptance verdict; the table is printed at the end of the run."""
    table = request.config._acceptance

    def _report(number: int, title: str, ok: bool, detail: str):
        table[number] = (title, bool(ok), detail)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    table = getattr(config, "_acceptance", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        title, ok, detail = table[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")
