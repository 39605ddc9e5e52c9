"""Ollivier-Ricci curvature of graph edges under the alpha-lazy random walk."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .graph import Graph, restricted_distances
from .transport import DiscreteMeasure, TransportProblem, wasserstein1, wasserstein1_oracle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvatureConfig:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")


class CurvatureMap:
    """Values keyed by canonical edge ``(min id, max id)``.

    Entries are held as two aligned arrays sorted by ``(i, j)``; self-loop
    entries ``(i, i)`` may be present once added by the weights pipeline.
    """

    def __init__(self, edges, values):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if edges.shape[0] != values.shape[0]:
            raise ValueError("edges and values differ in length")
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        self.edges = edges[order]
        self.values = values[order]
        self.edges.setflags(write=False)
        self.values.setflags(write=False)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, edge):
        i, j = sorted(edge)
        lo = np.searchsorted(self.edges[:, 0], i, side="left")
        hi = np.searchsorted(self.edges[:, 0], i, side="right")
        k = lo + np.searchsorted(self.edges[lo:hi, 1], j)
        if k < hi and self.edges[k, 1] == j:
            return float(self.values[k])
        raise KeyError(edge)

    def __contains__(self, edge):
        try:
            self[edge]
        except KeyError:
            return False
        return True

    def items(self):
        for (i, j), v in zip(self.edges, self.values):
            yield (int(i), int(j)), float(v)

    def as_dict(self) -> dict:
        return dict(self.items())

    @property
    def self_loop_mask(self) -> np.ndarray:
        return self.edges[:, 0] == self.edges[:, 1]

    def with_values(self, values) -> "CurvatureMap":
        return CurvatureMap(self.edges, values)

    def __eq__(self, other):
        if not isinstance(other, CurvatureMap):
            return NotImplemented
        return np.array_equal(self.edges, other.edges) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"CurvatureMap({len(self)} entries)"


def node_measure(g: Graph, i: int, cfg: CurvatureConfig = CurvatureConfig(), exact: bool = False) -> DiscreteMeasure:
    """Lazy random-walk measure at node ``i``.

    Keeps ``alpha`` at ``i`` and spreads ``1 - alpha`` evenly over the
    neighbours; an isolated node keeps all of its mass. With ``exact`` the
    masses are Fractions (``alpha`` read from its decimal repr).
    """
    nbrs = g.neighbors(i)
    k = nbrs.shape[0]
    alpha = Fraction(str(cfg.alpha)) if exact else cfg.alpha
    if k == 0:
        return DiscreteMeasure.point(i, exact=exact)
    spread = (1 - alpha) / k
    if cfg.alpha == 0:
        support, masses = nbrs, [spread] * k
    else:
        support = np.concatenate([[i], nbrs])
        masses = [alpha] + [spread] * k
    masses = np.array(masses, dtype=object) if exact else np.array(masses, dtype=np.float64)
    return DiscreteMeasure(support, masses)


def edge_problem(g: Graph, i: int, j: int, cfg: CurvatureConfig = CurvatureConfig(), exact: bool = False):
    mi = node_measure(g, i, cfg, exact)
    mj = node_measure(g, j, cfg, exact)
    # u - i - j - v bounds every pair of support nodes by three hops
    cost = restricted_distances(g, mi.support, mj.support, bound=3 if g.has_edge(i, j) else None)
    return TransportProblem(mi, mj, cost)


def edge_curvature(g: Graph, e, cfg: CurvatureConfig = CurvatureConfig()) -> float:
    """Curvature ``1 - W(m_i, m_j) / d(i, j)`` of edge ``e = (i, j)``."""
    i, j = int(e[0]), int(e[1])
    if not g.has_edge(i, j):
        raise ValueError(f"({i}, {j}) is not an edge")
    d = 1.0  # hop distance between adjacent nodes
    return 1.0 - wasserstein1(edge_problem(g, i, j, cfg)) / d


def edge_curvature_exact(g: Graph, e, cfg: CurvatureConfig = CurvatureConfig()) -> Fraction:
    """Same quantity as :func:`edge_curvature`, solved by the integer oracle."""
    i, j = int(e[0]), int(e[1])
    if not g.has_edge(i, j):
        raise ValueError(f"({i}, {j}) is not an edge")
    d = 1
    return 1 - wasserstein1_oracle(edge_problem(g, i, j, cfg, exact=True)) / d


def _curvature_chunk(args):
    g, edges, cfg = args
    return np.array([edge_curvature(g, e, cfg) for e in edges], dtype=np.float64)


def default_workers() -> int:
    cap = os.environ.get("CURVGRAPH_THREADS")
    return max(1, int(cap)) if cap else 1


def graph_curvature(
    g: Graph,
    cfg: CurvatureConfig = CurvatureConfig(),
    workers: int | None = None,
    cache_dir: str | os.PathLike | None = None,
) -> CurvatureMap:
    """Curvature of every edge of ``g``.

    Each edge is solved independently, so splitting the edges across
    ``workers`` processes gives exactly the serial result. With
    ``cache_dir`` the map is loaded from (or written to) a file keyed by
    the graph's content hash and ``alpha``.
    """
    if cache_dir is not None:
        path = Path(cache_dir) / f"{g.content_hash()[:16]}_a{cfg.alpha!r}.ricci"
        if path.exists():
            cmap, alpha = read_curvature(path)
            if alpha == cfg.alpha and np.array_equal(cmap.edges, g.edges()):
                return cmap
            logger.warning("ignoring stale curvature cache %s", path)
    edges = g.edges()
    workers = default_workers() if workers is None else workers
    if workers > 1 and edges.shape[0] > 1:
        chunks = np.array_split(edges, workers * 4)
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_curvature_chunk, [(g, c, cfg) for c in chunks]))
        values = np.concatenate(parts) if parts else np.zeros(0)
    else:
        values = _curvature_chunk((g, edges, cfg))
    cmap = CurvatureMap(edges, values)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        write_curvature(path, cmap, cfg.alpha, g.num_nodes)
    return cmap


def write_curvature(path, cmap: CurvatureMap, alpha: float, num_nodes: int) -> None:
    """Write the tab-separated cache file (17 significant digits)."""
    pairs = cmap.edges[~cmap.self_loop_mask]
    vals = cmap.values[~cmap.self_loop_mask]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#ricci alpha={alpha!r} nodes={num_nodes} edges={pairs.shape[0]}\n")
        for (i, j), v in zip(pairs, vals):
            fh.write(f"{i}\t{j}\t{v:.17g}\n")


def read_curvature(path) -> tuple[CurvatureMap, float]:
    """Parse a cache file; returns the map and the ``alpha`` it was built with."""
    edges, values = [], []
    alpha = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = dict(tok.split("=", 1) for tok in line[1:].split()[1:] if "=" in tok)
                if "alpha" in fields:
                    alpha = float(fields["alpha"])
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected i<TAB>j<TAB>curvature")
            edges.append((int(parts[0]), int(parts[1])))
            values.append(float(parts[2]))
    return CurvatureMap(np.array(edges, dtype=np.int64).reshape(-1, 2), values), alpha
