import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from curvgraph import build_graph, restricted_distances
from curvgraph.graph import from_scipy

from conftest import random_graph


def test_build_dedupes_symmetrizes_and_drops_loops():
    g = build_graph([(0, 1), (1, 0), (1, 1), (2, 1), (1, 2)], 4)
    assert g.num_nodes == 4
    assert g.edge_count == 2
    assert g.edges().tolist() == [[0, 1], [1, 2]]
    assert g.degree().tolist() == [1, 2, 1, 0]
    assert g.has_edge(1, 0) and not g.has_edge(0, 2)


def test_build_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_graph([(0, 5)], 3)
    with pytest.raises(ValueError):
        build_graph([(-1, 0)], 3)


def test_build_is_idempotent(rng):
    for _ in range(10):
        g = random_graph(rng, 30, 0.2)
        h = build_graph(g.edges(), g.num_nodes)
        assert np.array_equal(g.indptr, h.indptr)
        assert np.array_equal(g.indices, h.indices)
        assert g == h and g.content_hash() == h.content_hash()


def test_csr_arrays_are_read_only():
    g = build_graph([(0, 1)])
    with pytest.raises(ValueError):
        g.indices[0] = 1


def test_from_scipy_round_trip(rng):
    g = random_graph(rng, 15, 0.3)
    assert from_scipy(g.adjacency()) == g


def test_permute_preserves_structure(rng):
    g = random_graph(rng, 20, 0.2)
    perm = rng.permutation(20)
    h = g.permute(perm)
    for i, j in g.edges():
        assert h.has_edge(perm[i], perm[j])
    assert h.edge_count == g.edge_count


def test_distance_examples():
    p3 = build_graph([(0, 1), (1, 2)])
    assert restricted_distances(p3, [0], [2])[0, 0] == 2.0
    assert restricted_distances(p3, [1], [1])[0, 0] == 0.0
    two = build_graph([(0, 1), (2, 3)])
    assert restricted_distances(two, [0], [3])[0, 0] == np.inf


def test_distances_match_scipy(rng):
    for _ in range(20):
        g = random_graph(rng, 25, rng.uniform(0.05, 0.25))
        full = shortest_path(sp.csr_matrix(g.adjacency()), unweighted=True, directed=False)
        src = rng.choice(25, size=6, replace=False)
        dst = rng.choice(25, size=7, replace=False)
        np.testing.assert_array_equal(restricted_distances(g, src, dst), full[np.ix_(src, dst)])


def test_distance_symmetry_and_triangle(rng):
    g = random_graph(rng, 30, 0.1)
    nodes = np.arange(30)
    d = restricted_distances(g, nodes, nodes)
    np.testing.assert_array_equal(d, d.T)
    for _ in range(200):
        a, b, c = rng.integers(0, 30, size=3)
        assert d[a, c] <= d[a, b] + d[b, c]


def test_bounded_distances_cap_unresolved_pairs():
    path = build_graph([(k, k + 1) for k in range(6)])
    d = restricted_distances(path, [0], [1, 2, 3, 5], bound=3)
    assert d.tolist() == [[1.0, 2.0, 3.0, 3.0]]
