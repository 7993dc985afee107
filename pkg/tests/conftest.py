import numpy as np
import pytest

from incite.graph import RetweetGraph, graph_from_mappings

REPO = __import__("pathlib").Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO / "fixture"
GOLDEN_DIR = REPO / "tests" / "golden"


def random_graph(rng: np.random.Generator, max_nodes: int = 8,
                 ensure_strong: bool = False) -> RetweetGraph:
    """Small random weighted digraph; optionally force strong connectivity
    by threading a cycle through every node."""
    n = int(rng.integers(2, max_nodes + 1))
    names = [f"n{i}" for i in range(n)]
    edges: dict[tuple[str, str], int] = {}
    n_extra = int(rng.integers(0, n * (n - 1) + 1))
    for _ in range(n_extra):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges[(names[i], names[j])] = int(rng.integers(1, 6))
    if ensure_strong:
        order = rng.permutation(n)
        for a, b in zip(order, np.roll(order, -1)):
            edges.setdefault((names[a], names[b]), int(rng.integers(1, 6)))
    originals = {u: int(rng.integers(0, 4)) for u in names}
    if ensure_strong:
        # one self weight guarantees aperiodicity
        originals[names[int(rng.integers(0, n))]] += 1
    return graph_from_mappings(edges, originals)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)
