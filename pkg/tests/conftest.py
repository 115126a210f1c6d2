import pytest

from bomber.grid import Grid
from bomber.model import ModelParams
from bomber.solver import solve

SMALL = Grid(6.0, 121, 2.0, 101)


@pytest.fixture(scope="session")
def small_grid():
    return SMALL


@pytest.fixture(scope="session", params=[1.0, 0.75, 0.3])
def small_field(request):
    return solve(ModelParams(request.param), SMALL, threads=2)


@pytest.fixture(scope="session")
def field_v1():
    return solve(ModelParams(1.0), SMALL, threads=2)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one PASS/FAIL line per numbered acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
