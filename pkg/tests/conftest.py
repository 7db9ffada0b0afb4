import numpy as np
import pytest

from mapcones import numerics as nm

# lines reported by the acceptance checks, echoed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return nm.make_rng(12345)


def random_matrix(rng, n, m=None):
    return nm.complex_gaussian(rng, (n, m or n))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
