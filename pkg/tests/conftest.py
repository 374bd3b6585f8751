import hypothesis.strategies as st
import pytest

from stablelab.core import FiniteDistribution, Hypothesis, HypothesisClass


@st.composite
def hypotheses(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    return Hypothesis(n, draw(st.integers(0, (1 << n) - 1)))


@st.composite
def classes(draw, max_n=6, max_size=20, min_size=1):
    n = draw(st.integers(1, max_n))
    bits = draw(
        st.sets(st.integers(0, (1 << n) - 1), min_size=min_size, max_size=min(max_size, 1 << n))
    )
    return HypothesisClass(n, [Hypothesis(n, b) for b in bits])


@st.composite
def distributions(draw, n=None, max_n=6):
    if n is None:
        n = draw(st.integers(1, max_n))
    cells = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, 1)), min_size=1, max_size=2 * n))
    weights = draw(st.lists(st.integers(1, 100), min_size=len(cells), max_size=len(cells)))
    total = sum(weights)
    return FiniteDistribution(n, [(c, w / total) for c, w in zip(sorted(cells), weights)])


@pytest.fixture
def three_atoms():
    return FiniteDistribution.uniform(3, [(0, 1), (1, 0), (2, 1)])


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
