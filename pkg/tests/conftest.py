import numpy as np
import pytest

from atcgad import Graph


@pytest.fixture
def triangle():
    features = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return Graph(3, np.array([[0, 1], [1, 2], [0, 2]]), features)


@pytest.fixture
def path5():
    # 0 - 1 - 2 - 3 - 4
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 4]])
    features = np.arange(10, dtype=float).reshape(5, 2)
    return Graph(5, edges, features)


def random_graph(rng, n, d, edge_prob=0.3):
    """Erdos-Renyi helper for randomized fixtures."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    features = rng.standard_normal((n, d))
    return Graph(n, edges, features)
