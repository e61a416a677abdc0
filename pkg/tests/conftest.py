import numpy as np
import pytest
from hypothesis import settings

from dmsecure.array_model import ArrayGeometry

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ula8():
    return ArrayGeometry.ula(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n):
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return h / np.linalg.norm(h)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
