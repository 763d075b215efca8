import numpy as np
import pytest
from hypothesis import strategies as st

from dsae.graph import DirectedGraph

# criterion number -> (passed, message); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def random_graph(rng, n: int, p: float = 0.15, connected: bool = False) -> DirectedGraph:
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    edges = set(zip(*np.nonzero(A)))
    if connected:
        # random in-tree over a shuffled order guarantees weak connectivity
        order = rng.permutation(n)
        for k in range(1, n):
            a, b = int(order[k]), int(order[rng.integers(k)])
            if (a, b) not in edges and (b, a) not in edges:
                edges.add((a, b) if rng.random() < 0.5 else (b, a))
    return DirectedGraph.from_edges(n, sorted((int(u), int(v)) for u, v in edges))


@st.composite
def digraphs(draw, min_n: int = 2, max_n: int = 12):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(len(pairs), 40)))
    return DirectedGraph.from_edges(n, chosen)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, msg = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
