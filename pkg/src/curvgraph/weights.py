"""Turn edge curvature into per-neighbour aggregation weights.

The pipeline is fixed: add self-loops (curvature 1), make every value
positive with a monotone transform, then normalise by curvature-degrees.
The resulting weights stay frozen for the whole of training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .curvature import CurvatureConfig, CurvatureMap, graph_curvature
from .graph import Graph

NCTM_KINDS = ("linear", "sigmoid", "none")
CNM_KINDS = ("first_hop", "second_hop", "symmetric", "none")

_NCTM_ALIASES = {"exp": "sigmoid", "lin": "linear"}
_CNM_ALIASES = {
    "first": "first_hop", "1st": "first_hop",
    "second": "second_hop", "2nd": "second_hop",
    "sym": "symmetric",
}


class WeightError(ValueError):
    """Normalisation divided by a zero curvature-degree."""


class ImaginaryWeightError(WeightError):
    """Symmetric normalisation hit a non-positive curvature-degree."""

    def __init__(self, node: int, degree: float):
        super().__init__(
            f"node {node} has curvature-degree {degree:.6g} <= 0; "
            "symmetric normalisation would need its square root"
        )
        self.node = node
        self.degree = degree


@dataclass(frozen=True)
class NctmMode:
    kind: str = "linear"
    epsilon: float = 1.0

    def __post_init__(self):
        kind = _NCTM_ALIASES.get(self.kind, self.kind)
        if kind not in NCTM_KINDS:
            raise ValueError(f"unknown NCTM mode {self.kind!r}; choose from {NCTM_KINDS}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "kind", kind)


def cnm_mode(name: str) -> str:
    kind = _CNM_ALIASES.get(name, name)
    if kind not in CNM_KINDS:
        raise ValueError(f"unknown CNM mode {name!r}; choose from {CNM_KINDS}")
    return kind


class WeightedAdjacency:
    """Directed weights, row ``i`` holding ``tau[i, j]`` for ``j`` in the
    closed neighbourhood of ``i`` (self-loop included).

    ``matrix`` is an ``N x N`` CSR matrix, so aggregation is ``matrix @ H``.
    """

    def __init__(self, matrix: sp.csr_matrix):
        self.matrix = sp.csr_matrix(matrix)
        self.matrix.sort_indices()

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def indptr(self):
        return self.matrix.indptr

    @property
    def indices(self):
        return self.matrix.indices

    @property
    def data(self):
        return self.matrix.data

    def row(self, i: int) -> dict:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {int(j): float(t) for j, t in zip(self.indices[lo:hi], self.data[lo:hi])}

    def __getitem__(self, ij):
        return self.row(ij[0])[ij[1]]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def col_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def entries(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def write_tsv(self, path) -> None:
        """``i<TAB>j<TAB>tau`` for every stored entry, target first."""
        rows, cols, vals = self.entries()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#tau nodes={self.num_nodes} entries={vals.shape[0]}\n")
            for i, j, t in zip(rows, cols, vals):
                fh.write(f"{i}\t{j}\t{t:.17g}\n")

    def __repr__(self):
        return f"WeightedAdjacency(num_nodes={self.num_nodes}, entries={self.matrix.nnz})"


def inject_self_loops(c: CurvatureMap, g: Graph) -> CurvatureMap:
    """Add ``(i, i) -> 1.0`` for every node that has no self-loop entry yet."""
    have = c.edges[c.self_loop_mask, 0]
    missing = np.setdiff1d(np.arange(g.num_nodes), have)
    loops = np.stack([missing, missing], axis=1)
    return CurvatureMap(
        np.concatenate([c.edges, loops]), np.concatenate([c.values, np.ones(missing.shape[0])])
    )


def nctm(c: CurvatureMap, mode: NctmMode) -> CurvatureMap:
    """Shift (``linear``) or squash (``sigmoid``) all entries, self-loops included."""
    v = c.values
    if mode.kind == "linear":
        if len(c) == 0:
            raise ValueError("linear transform needs at least one entry")
        return c.with_values(v - v.min() + mode.epsilon)
    if mode.kind == "sigmoid":
        return c.with_values(expit(v))
    return c


def curvature_degrees(c: CurvatureMap) -> np.ndarray:
    """Sum of entries over each node's closed neighbourhood.

    Node count is taken from the self-loops, which must cover ``0..N-1``.
    """
    loops = c.edges[c.self_loop_mask, 0]
    n = loops.shape[0]
    if not np.array_equal(loops, np.arange(n)):
        raise ValueError("curvature map must carry a self-loop for every node")
    if c.edges.size and c.edges.max() >= n:
        raise ValueError("edge refers to a node without a self-loop")
    i, j = c.edges[:, 0], c.edges[:, 1]
    off = i != j
    d = np.bincount(loops, weights=c.values[c.self_loop_mask], minlength=n)
    d += np.bincount(i[off], weights=c.values[off], minlength=n)
    d += np.bincount(j[off], weights=c.values[off], minlength=n)
    return d


def cnm(c: CurvatureMap, mode: str) -> WeightedAdjacency:
    """Normalise transformed curvature into directed weights.

    With target ``i`` and neighbour ``j``: ``first_hop`` divides by the
    degree of ``i``, ``second_hop`` by that of ``j``, ``symmetric`` by the
    geometric mean of both; ``none`` keeps the raw values.

    Raises
    ------
    ImaginaryWeightError
        ``symmetric`` with a node whose curvature-degree is <= 0.
    WeightError
        A hop normalisation dividing by a zero curvature-degree.
    """
    mode = cnm_mode(mode)
    d = curvature_degrees(c)
    n = d.shape[0]
    i, j = c.edges[:, 0], c.edges[:, 1]
    off = i != j
    rows = np.concatenate([i, j[off]])
    cols = np.concatenate([j, i[off]])
    r = np.concatenate([c.values, c.values[off]])
    if mode == "symmetric":
        bad = np.flatnonzero(d <= 0)
        if bad.size:
            raise ImaginaryWeightError(int(bad[0]), float(d[bad[0]]))
        tau = r / np.sqrt(d[rows] * d[cols])
    elif mode in ("first_hop", "second_hop"):
        by = rows if mode == "first_hop" else cols
        zero = np.flatnonzero(d[by] == 0)
        if zero.size:
            node = int(by[zero[0]])
            raise WeightError(f"node {node} has curvature-degree 0; cannot normalise")
        tau = r / d[by]
    else:
        tau = r
    return WeightedAdjacency(sp.csr_matrix((tau, (rows, cols)), shape=(n, n)))


def build_weights(
    g: Graph,
    cfg: CurvatureConfig = CurvatureConfig(),
    nctm_mode: NctmMode = NctmMode(),
    cnm_kind: str = "first_hop",
    curvature: CurvatureMap | None = None,
) -> WeightedAdjacency:
    """Curvature -> self-loops -> NCTM -> CNM. ``curvature`` skips recomputation."""
    if curvature is None:
        curvature = graph_curvature(g, cfg)
    return cnm(nctm(inject_self_loops(curvature, g), nctm_mode), cnm_kind)


def uniform_curvature(g: Graph, value: float = 1.0) -> CurvatureMap:
    e = g.edges()
    return CurvatureMap(e, np.full(e.shape[0], value))


def gcn_weights(g: Graph) -> WeightedAdjacency:
    """Unit curvature everywhere plus symmetric normalisation."""
    return cnm(inject_self_loops(uniform_curvature(g), g), "symmetric")


def mlp_weights(n: int) -> WeightedAdjacency:
    return WeightedAdjacency(sp.identity(n, format="csr"))
