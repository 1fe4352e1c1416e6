import pytest
from hypothesis import settings

from dcmvoter.checks import k3
from dcmvoter.graph import from_edges

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def k3_graph():
    return k3()


@pytest.fixture
def loop_graph():
    """One vertex with two self-loops."""
    return from_edges(1, [(0, 0, 2)])


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
