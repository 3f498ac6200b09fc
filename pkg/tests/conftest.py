import numpy as np
import pytest
from hypothesis import settings

from windowbands import make_grid, straight_strip, zero_potential

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion; reported in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _CRITERIA[number] = (bool(ok), detail)
        print(f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def strip():
    return straight_strip()


@pytest.fixture(scope="session")
def zero():
    return zero_potential()


@pytest.fixture(scope="session")
def strip_grid(strip):
    return make_grid(strip, 32, 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
