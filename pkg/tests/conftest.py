import numpy as np
import pytest
from hypothesis import settings, strategies as st

from soligas import SolitonConfig

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def pair():
    return SolitonConfig([1.0, 2.0], [0.0, 0.0])


@st.composite
def configs(draw, n_min=1, n_max=6, chi_lo=0.5, chi_hi=3.0, y_span=10.0):
    n = draw(st.integers(n_min, n_max))
    chi = draw(
        st.lists(st.floats(chi_lo, chi_hi), min_size=n, max_size=n, unique=True).filter(
            lambda c: len(c) < 2 or np.min(np.diff(np.sort(c))) > 1e-3
        )
    )
    y = draw(st.lists(st.floats(-y_span, y_span), min_size=n, max_size=n))
    return SolitonConfig(chi, y)


def random_config(rng, n, chi_range=(0.5, 3.0), y_span=10.0):
    while True:
        chi = rng.uniform(*chi_range, n)
        if n < 2 or np.min(np.diff(np.sort(chi))) > 1e-3:
            return SolitonConfig(chi, rng.uniform(-y_span, y_span, n))


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, summary: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
