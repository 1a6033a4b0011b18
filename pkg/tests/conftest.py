import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

J2 = np.array([[0, 1], [0, 0]], dtype=complex)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def complex_matrices(draw, min_dim=1, max_dim=5):
    n = draw(st.integers(min_dim, max_dim))
    re = draw(arrays(float, (n, n), elements=finite))
    im = draw(arrays(float, (n, n), elements=finite))
    return re + 1j * im


@st.composite
def seeded_matrices(draw, min_dim=1, max_dim=6, scale=1.0):
    """Gaussian matrices from a drawn seed: better conditioned than raw float draws."""
    n = draw(st.integers(min_dim, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return scale * crandn(rng, n, n)


# acceptance summary: one line per criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[2:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
