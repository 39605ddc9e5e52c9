"""Immutable undirected graphs stored as CSR adjacency."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class Graph:
    """Unweighted undirected graph on nodes ``0..num_nodes-1``.

    Every undirected edge is stored in both directions; column indices in
    each row are strictly increasing and self-loops are never stored.
    Build instances with :func:`build_graph` rather than directly.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return int(self.indices.shape[0] // 2)

    def degree(self, i: int | None = None):
        deg = np.diff(self.indptr)
        if i is None:
            return deg
        return int(deg[i])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbors(i)
        k = np.searchsorted(row, j)
        return bool(k < row.shape[0] and row[k] == j)

    def edges(self) -> np.ndarray:
        """Canonical ``(i, j)`` pairs with ``i < j``, sorted lexicographically."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.indptr))
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def adjacency(self, dtype=np.float64) -> sp.csr_matrix:
        data = np.ones(self.indices.shape[0], dtype=dtype)
        return sp.csr_matrix(
            (data, self.indices.copy(), self.indptr.copy()),
            shape=(self.num_nodes, self.num_nodes),
        )

    @cached_property
    def _adj(self) -> sp.csr_matrix:
        return self.adjacency()

    @cached_property
    def _closed_adj(self) -> sp.csr_matrix:
        return (self._adj + sp.identity(self.num_nodes, format="csr")).tocsr()

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.num_nodes).tobytes())
        h.update(self.indptr.astype(np.int64).tobytes())
        h.update(self.indices.astype(np.int64).tobytes())
        return h.hexdigest()

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        e = self.edges()
        return build_graph(perm[e], self.num_nodes)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, edge_count={self.edge_count})"


def build_graph(edges: Iterable[tuple[int, int]] | np.ndarray, num_nodes: int | None = None) -> Graph:
    """Build a :class:`Graph` from an edge sequence.

    Duplicates (in either direction) are collapsed and self-loops dropped.
    When ``num_nodes`` is omitted it is inferred as ``max id + 1``.

    Raises
    ------
    ValueError
        If a node id is negative or not smaller than ``num_nodes``.
    """
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    e = e.reshape(-1, 2)
    if num_nodes is None:
        num_nodes = int(e.max()) + 1 if e.size else 0
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        bad = e[(e < 0) | (e >= num_nodes)][0]
        raise ValueError(f"node id {int(bad)} out of range for num_nodes={num_nodes}")
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]], axis=0)
    if both.size:
        key = both[:, 0] * num_nodes + both[:, 1]
        key = np.unique(key)
        rows, cols = key // num_nodes, key % num_nodes
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_nodes), out=indptr[1:])
    return Graph(int(num_nodes), indptr, cols.astype(np.int64))


def from_scipy(adj: sp.spmatrix) -> Graph:
    """Symmetrize a (possibly directed, weighted) sparse matrix into a Graph."""
    coo = sp.coo_matrix(adj)
    return build_graph(np.stack([coo.row, coo.col], axis=1), adj.shape[0])


def restricted_distances(
    g: Graph,
    sources: Sequence[int],
    targets: Sequence[int],
    bound: int | None = None,
) -> np.ndarray:
    """Hop distances from each source to each target.

    Balls are grown breadth-first around the sources and the targets at the
    same time; the pair ``(s, t)`` is at distance ``2r`` once the radius-``r``
    balls of ``s`` and ``t`` meet, and at ``2r + 1`` once an edge joins them.
    Growth stops as soon as every pair is resolved.

    Parameters
    ----------
    bound : int, optional
        A distance every source-target pair is known not to exceed. Pairs
        still unresolved when the search reaches ``bound - 1`` are set to
        ``bound`` without expanding further. Neighbourhoods of the two
        endpoints of an edge satisfy ``bound=3``.

    Returns
    -------
    ndarray of shape (len(sources), len(targets))
        Float64 hop counts, ``inf`` for disconnected pairs.
    """
    sources = np.asarray(sources, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    n = g.num_nodes
    out = np.full((sources.shape[0], targets.shape[0]), np.inf)
    if out.size == 0:
        return out
    A = g._adj
    out[sources[:, None] == targets[None, :]] = 0.0
    if bound == 0 or not np.isinf(out).any():
        return out
    touch = A[sources][:, targets].toarray() > 0
    out[touch & np.isinf(out)] = 1.0
    if not np.isinf(out).any():
        return out
    if bound == 1:
        out[np.isinf(out)] = 1.0
        return out

    bs = g._closed_adj[sources]
    bt = g._closed_adj[targets]
    radius = 1
    while True:
        if bound is not None and 2 * radius >= bound:
            out[np.isinf(out)] = bound
            break
        meet = (bs @ bt.T).toarray() > 0
        out[meet & np.isinf(out)] = 2 * radius
        if not np.isinf(out).any():
            break
        if bound is not None and 2 * radius + 1 >= bound:
            out[np.isinf(out)] = bound
            break
        touch = (bs @ A @ bt.T).toarray() > 0
        out[touch & np.isinf(out)] = 2 * radius + 1
        if not np.isinf(out).any():
            break
        grow_s = sp.csr_matrix(((bs @ A + bs) > 0).astype(np.float64))
        grow_t = sp.csr_matrix(((bt @ A + bt) > 0).astype(np.float64))
        if grow_s.nnz == bs.nnz and grow_t.nnz == bt.nnz:
            break
        bs, bt = grow_s, grow_t
        radius += 1
    return out
