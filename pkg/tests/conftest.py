import numpy as np
import pytest
from hypothesis import strategies as st

from gfp.graph import DirectedGraph
from gfp.synth import star


def random_digraph(n: int, p: float, seed: int) -> DirectedGraph:
    rng = np.random.default_rng(seed)
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    return DirectedGraph.from_edges(n, src, dst)


def tied_values(rng: np.random.Generator, n: int, kind: str) -> np.ndarray:
    """Attribute arrays with plenty of ties, zeros and awkward floats."""
    if kind == "small_int":
        return rng.integers(0, 4, n)
    if kind == "wide_int":
        return rng.integers(-50, 10_000, n)
    if kind == "zero_heavy":
        v = rng.integers(0, 30, n)
        v[rng.random(n) < 0.7] = 0
        return v
    if kind == "decimal":
        return np.round(rng.integers(0, 7, n) / 10, 1)
    if kind == "ratio":
        return rng.integers(0, 5, n) / rng.integers(1, 4, n)
    if kind == "pareto":
        return rng.pareto(2.5, n) + 1.0
    if kind == "constant":
        return np.full(n, 0.1)
    return rng.normal(size=n)


VALUE_KINDS = ["small_int", "wide_int", "zero_heavy", "decimal", "ratio", "pareto", "constant", "normal"]


@st.composite
def digraphs(draw, max_nodes: int = 12):
    n = draw(st.integers(min_value=1, max_value=max_nodes))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n * n))
    src = [a for a, b in pairs]
    dst = [b for a, b in pairs]
    return DirectedGraph.from_edges(n, src, dst)


@pytest.fixture
def star10():
    return star(10)
