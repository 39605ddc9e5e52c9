import numpy as np
import pytest

from curvgraph import build_graph


def random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    return build_graph(np.stack([iu[keep], ju[keep]], axis=1), n)


def grid_graph(rows, cols):
    idx = lambda r, c: r * cols + c
    edges = [(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(idx(r, c), idx(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return build_graph(edges, rows * cols)


def complete_graph(n):
    return build_graph([(i, j) for i in range(n) for j in range(i + 1, n)], n)


def hub_tree(hubs=3, leaves=5):
    """Root 0 joined to ``hubs`` hubs, each carrying ``leaves`` pendant nodes."""
    edges, nxt = [], hubs + 1
    for h in range(1, hubs + 1):
        edges.append((0, h))
        for _ in range(leaves):
            edges.append((h, nxt))
            nxt += 1
    return build_graph(edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
