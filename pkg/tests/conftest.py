import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ilpconsist.fixtures import heterogeneity_fixture, inconsistent_fixture, toy_hierarchy  # noqa: E402

# criterion number -> (description, passed)
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.fixture
def toy():
    return toy_hierarchy()


@pytest.fixture
def hetero():
    return heterogeneity_fixture()


@pytest.fixture
def inconsistent():
    return inconsistent_fixture()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        desc, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {desc}")
