import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_stable(rng, n, margin=0.5):
    """Random Hurwitz matrix: shift a random matrix left of its spectral abscissa."""
    a = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(a).real) + margin
    return a - shift * np.eye(n)


def random_spd(rng, n, floor=0.5):
    m = rng.standard_normal((n, n))
    return m @ m.T + floor * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
