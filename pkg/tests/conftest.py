import pytest

from critset.planar import paper_map, trace_critical_set

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def z7():
    return paper_map()


@pytest.fixture(scope="session")
def z7_curves(z7):
    return trace_critical_set(z7, (-2.0, 2.0, -2.0, 2.0), 512)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: (int(s.split()[1].rstrip(":").split(".")[0]), s)):
            terminalreporter.write_line(line)
