import pytest

from wellopt.reservoir.model import build_model1
from wellopt.reservoir.objective import NpvFamily


@pytest.fixture(scope="session")
def model21():
    return build_model1(21)


@pytest.fixture(scope="session")
def family21(model21):
    model, fluid, econ, _, _ = model21
    return NpvFamily(model, fluid, econ)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
