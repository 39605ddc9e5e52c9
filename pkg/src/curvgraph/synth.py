"""Synthetic graphs (SBM, Erdos-Renyi, Barabasi-Albert), features and splits.

Class labels always follow node index blocks: with ``n`` nodes and ``c``
classes node ``i`` belongs to class ``i // (n // c)``. For the SBM the
blocks are the communities; for Barabasi-Albert they are arrival cohorts,
so early (hub) nodes share a class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, build_graph
from .io import DatasetBundle, SplitMasks

DEFAULT_SEED = 2020


@dataclass(frozen=True)
class SbmSpec:
    n: int = 1000
    blocks: int = 5
    p_intra: float = 0.15
    q_inter: float = 0.025
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("p_intra", "q_inter"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.blocks < 1 or self.n % self.blocks:
            raise ValueError(f"{self.n} nodes cannot be split into {self.blocks} equal blocks")


def block_labels(n: int, classes: int) -> np.ndarray:
    if n % classes:
        raise ValueError(f"{n} nodes cannot be split into {classes} equal classes")
    return np.arange(n, dtype=np.int64) // (n // classes)


def _bernoulli_pairs(n, prob_of_pair, rng):
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(i.shape[0]) < prob_of_pair(i, j)
    return np.stack([i[keep], j[keep]], axis=1)


def gen_sbm(spec: SbmSpec = SbmSpec()) -> tuple[Graph, np.ndarray]:
    """Sample a stochastic block model with equal blocks.

    Each pair is an edge independently, with probability ``p_intra`` inside
    a block and ``q_inter`` across blocks. Returns the graph and block ids.
    """
    rng = np.random.default_rng(spec.seed)
    labels = block_labels(spec.n, spec.blocks)
    edges = _bernoulli_pairs(
        spec.n, lambda i, j: np.where(labels[i] == labels[j], spec.p_intra, spec.q_inter), rng
    )
    return build_graph(edges, spec.n), labels


def gen_er(n: int = 1000, p: float = 0.01, seed: int = DEFAULT_SEED) -> Graph:
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    return build_graph(_bernoulli_pairs(n, lambda i, j: p, rng), n)


def gen_ba(n: int = 1000, m: int = 5, seed: int = DEFAULT_SEED) -> Graph:
    """Barabasi-Albert preferential attachment.

    Starts from a clique on nodes ``0..m-1``; node ``t >= m`` then links to
    ``m`` distinct earlier nodes drawn with probability proportional to
    their current degree (uniformly while every degree is zero, which only
    happens for ``m = 1``). The result has ``m (n - m) + m (m - 1) / 2``
    edges and is connected.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=np.float64)
    edges = [(a, b) for a in range(m) for b in range(a + 1, m)]
    deg[:m] = m - 1
    for t in range(m, n):
        w = deg[:t]
        total = w.sum()
        probs = w / total if total > 0 else None
        targets = rng.choice(t, size=m, replace=False, p=probs)
        edges.extend((int(u), t) for u in targets)
        deg[targets] += 1
        deg[t] = m
    return build_graph(edges, n)


def gen_features_and_splits(
    labels: np.ndarray,
    dim: int = 20,
    seed: int = DEFAULT_SEED,
    train_per_class: int = 20,
    num_val: int = 300,
    num_test: int | None = None,
) -> tuple[np.ndarray, SplitMasks]:
    """Standard-normal features plus a class-stratified split.

    ``train_per_class`` nodes are drawn from every class, ``num_val`` of the
    rest go to validation and the remainder (or ``num_test`` of it) to test.
    With 1000 nodes in 5 classes this is the 100 / 300 / 600 protocol.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, dim))
    train = np.zeros(n, dtype=bool)
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.shape[0] < train_per_class:
            raise ValueError(
                f"class {c} has {members.shape[0]} nodes, fewer than {train_per_class}"
            )
        train[rng.choice(members, size=train_per_class, replace=False)] = True
    rest = rng.permutation(np.flatnonzero(~train))
    if num_val > rest.shape[0]:
        raise ValueError(f"only {rest.shape[0]} nodes left for validation")
    val = np.zeros(n, dtype=bool)
    val[rest[:num_val]] = True
    test = np.zeros(n, dtype=bool)
    tail = rest[num_val:] if num_test is None else rest[num_val:num_val + num_test]
    test[tail] = True
    return features, SplitMasks(train, val, test)


def synthetic_graph(model: str, graph_seed: int = DEFAULT_SEED, n: int = 1000, classes: int = 5, **params):
    """Graph and index-block labels for ``model`` in {"sbm", "er", "ba"}."""
    if model == "sbm":
        return gen_sbm(SbmSpec(n=n, blocks=classes, seed=graph_seed,
                               p_intra=params.get("p", 0.15), q_inter=params.get("q", 0.025)))
    if model == "er":
        return gen_er(n, params.get("p", 0.01), graph_seed), block_labels(n, classes)
    if model == "ba":
        return gen_ba(n, params.get("m", 5), graph_seed), block_labels(n, classes)
    raise ValueError(f"unknown graph model {model!r}")


def synthetic_dataset(
    model: str,
    seed: int = DEFAULT_SEED,
    graph_seed: int = DEFAULT_SEED,
    dim: int = 20,
    n: int = 1000,
    classes: int = 5,
    graph: tuple[Graph, np.ndarray] | None = None,
    num_val: int = 300,
    **params,
) -> DatasetBundle:
    """One synthetic dataset: fixed graph from ``graph_seed``, features and
    split from ``seed``. Pass a prebuilt ``(graph, labels)`` to skip sampling."""
    g, labels = graph if graph is not None else synthetic_graph(model, graph_seed, n, classes, **params)
    features, splits = gen_features_and_splits(labels, dim=dim, seed=seed, num_val=num_val)
    return DatasetBundle(g, features, labels, splits, name=f"{model}-{seed}")
