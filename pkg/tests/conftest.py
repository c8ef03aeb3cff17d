import numpy as np
import pytest
from hypothesis import strategies as st

from kanon.matrix import SparseBinaryMatrix


def random_matrix(rng, n, m, density):
    rows = [np.flatnonzero(rng.random(m) < density) for _ in range(n)]
    return SparseBinaryMatrix.from_rows(rows, m)


def as_set(m):
    """Edge set of a matrix as python tuples (independent of the CSR code paths)."""
    return {(u, int(f)) for u in range(m.n_users) for f in m.row(u)}


@st.composite
def matrices(draw, max_users=8, max_features=6):
    n = draw(st.integers(1, max_users))
    m = draw(st.integers(1, max_features))
    rows = [draw(st.sets(st.integers(0, m - 1), max_size=m)) for _ in range(n)]
    return SparseBinaryMatrix.from_rows(rows, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
