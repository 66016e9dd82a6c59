import numpy as np
import pytest
from hypothesis import strategies as st

from sphere_reduction.core import ParticleState, SkewMatrix, momentum_from_state


def random_plane(n, rng) -> SkewMatrix:
    """Unit bivector of a random 2-plane in R^n."""
    while True:
        x, v = rng.normal(size=n), rng.normal(size=n)
        l = momentum_from_state(ParticleState(x, v))
        if l.norm2 > 1e-6:
            return l.normalized()


@st.composite
def planes(draw, n=None, min_n=3, max_n=6):
    if n is None:
        n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_plane(n, np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
