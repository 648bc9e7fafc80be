from pathlib import Path

import pytest

from cabl.tasks import make_addition_task, make_chess_task

GOLDEN = Path(__file__).parent / "golden"
KBS = Path(__file__).resolve().parents[1] / "src" / "cabl" / "kbs"


@pytest.fixture(scope="session")
def add10():
    return make_addition_task(10, 1)


@pytest.fixture(scope="session")
def add10d2():
    return make_addition_task(10, 2)


@pytest.fixture(scope="session")
def add16():
    return make_addition_task(16, 1)


@pytest.fixture(scope="session")
def chess():
    return make_chess_task()


@pytest.fixture(scope="session")
def chess2():
    return make_chess_task(8, 2)


# --------------------------------------------------------------------------- space bound

SPACES_CHECKED = {"count": 0}
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session", autouse=True)
def _enforce_space_bound():
    """Every abduction space built anywhere in the suite must satisfy |S| <= N^m."""
    from cabl.abduction import AbductionSpace

    original = AbductionSpace.__init__

    def checked(self, target, domain, members):
        original(self, target, domain, members)
        if members:
            m = len(members[0])
            assert len(members) <= len(domain) ** m, f"|S|={len(members)} exceeds {len(domain)}^{m}"
        SPACES_CHECKED["count"] += 1

    AbductionSpace.__init__ = checked
    yield
    AbductionSpace.__init__ = original


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
