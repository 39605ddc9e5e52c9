"""Two-layer curvature-weighted GNN with hand-written gradients.

Both layers aggregate with the same frozen weight matrix ``T``::

    H1     = relu(T @ (X @ W1))
    logits = T @ (H1 @ W2)

GCN is the special case of unit curvature with symmetric normalisation
and an MLP is ``T = I``. Training is full batch with Adam, cross-entropy
on the training nodes, L2 on the weight matrices and early stopping on
validation accuracy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from .curvature import CurvatureConfig, CurvatureMap, graph_curvature
from .graph import Graph
from .io import DatasetBundle, SplitMasks
from .weights import NctmMode, WeightedAdjacency, build_weights, cnm_mode, gcn_weights, mlp_weights

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, what: str = "loss"):
        super().__init__(f"non-finite {what} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class WeightScheme:
    """How the aggregation weights are produced.

    ``kind`` is ``"curvature"`` (NCTM + CNM on Ricci curvature), ``"gcn"``
    or ``"mlp"``; ``nctm`` / ``cnm`` / ``alpha`` only matter for curvature.
    """

    kind: str = "curvature"
    nctm: NctmMode = NctmMode()
    cnm: str = "first_hop"
    alpha: float = 0.5

    def __post_init__(self):
        if self.kind not in ("curvature", "gcn", "mlp"):
            raise ValueError(f"unknown weight scheme {self.kind!r}")
        object.__setattr__(self, "cnm", cnm_mode(self.cnm))

    @property
    def label(self) -> str:
        if self.kind != "curvature":
            return self.kind.upper()
        nctm = {"linear": "Linear", "sigmoid": "Exp", "none": "None"}[self.nctm.kind]
        cnm = {"first_hop": "1st", "second_hop": "2nd", "symmetric": "Sym", "none": "None"}[self.cnm]
        return f"CGNN_{nctm}_{cnm}"

    def weights(self, g: Graph, curvature: CurvatureMap | None = None) -> WeightedAdjacency:
        if self.kind == "gcn":
            return gcn_weights(g)
        if self.kind == "mlp":
            return mlp_weights(g.num_nodes)
        cfg = CurvatureConfig(self.alpha)
        return build_weights(g, cfg, self.nctm, self.cnm, curvature=curvature)


@dataclass(frozen=True)
class ModelConfig:
    hidden_dim: int = 64
    scheme: WeightScheme = WeightScheme()
    lr: float = 0.005
    l2: float = 0.0005
    l2_first_layer_only: bool = False
    patience: int = 100
    max_epochs: int = 1000
    seed: int = 2020
    dropout: float = 0.0
    bias: bool = False

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.hidden_dim < 1 or self.max_epochs < 0:
            raise ValueError("hidden_dim must be >= 1 and max_epochs >= 0")


@dataclass
class ModelState:
    params: dict
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @property
    def W1(self):
        return self.params["W1"]

    @property
    def W2(self):
        return self.params["W2"]

    def copy(self) -> "ModelState":
        return ModelState(
            {k: a.copy() for k, a in self.params.items()},
            {k: a.copy() for k, a in self.m.items()},
            {k: a.copy() for k, a in self.v.items()},
            self.step,
        )


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on ``[-a, a]`` with ``a = sqrt(6 / (rows + cols))``."""
    if rows < 1 or cols < 1:
        raise ValueError("glorot_init needs positive dimensions")
    a = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols))


def init_state(in_dim: int, hidden: int, classes: int, rng: np.random.Generator, bias: bool = False) -> ModelState:
    params = {"W1": glorot_init(in_dim, hidden, rng), "W2": glorot_init(hidden, classes, rng)}
    if bias:
        params["b1"] = np.zeros(hidden)
        params["b2"] = np.zeros(classes)
    return ModelState(
        params,
        {k: np.zeros_like(a) for k, a in params.items()},
        {k: np.zeros_like(a) for k, a in params.items()},
    )


def _matrix(T):
    return T.matrix if isinstance(T, WeightedAdjacency) else T


def forward(X, T, S: ModelState, dropout: float = 0.0, rng: np.random.Generator | None = None):
    """Logits plus the intermediates :func:`loss_and_grads` needs.

    Dropout (inverted, on the input and hidden activations) is applied only
    when ``dropout > 0`` and an ``rng`` is supplied.
    """
    T = _matrix(T)
    p = S.params
    drop_x = drop_h = None
    if dropout > 0 and rng is not None:
        drop_x = (rng.random(X.shape) >= dropout) / (1.0 - dropout)
        X = X * drop_x
    pre = T @ (X @ p["W1"])
    if "b1" in p:
        pre = pre + p["b1"]
    H1 = np.maximum(pre, 0.0)
    Hd = H1
    if dropout > 0 and rng is not None:
        drop_h = (rng.random(H1.shape) >= dropout) / (1.0 - dropout)
        Hd = H1 * drop_h
    logits = T @ (Hd @ p["W2"])
    if "b2" in p:
        logits = logits + p["b2"]
    if not np.isfinite(logits).all():
        raise FloatingPointError("non-finite activations in forward pass")
    cache = {"X": X, "T": T, "pre": pre, "Hd": Hd, "drop_h": drop_h}
    return logits, cache


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def data_loss(logits, labels, mask) -> float:
    idx = np.flatnonzero(mask)
    return float(-log_softmax(logits[idx])[np.arange(idx.size), labels[idx]].mean())


def loss_and_grads(logits, labels, mask, S: ModelState, l2: float, cache: dict, l2_first_layer_only: bool = False):
    """Mean cross-entropy over ``mask`` plus ``l2 / 2`` times the squared
    norm of the weight matrices, and its gradient for every parameter."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("loss mask selects no nodes")
    p = S.params
    logp = log_softmax(logits[idx])
    loss = -logp[np.arange(idx.size), labels[idx]].mean()
    reg_keys = ("W1",) if l2_first_layer_only else ("W1", "W2")
    loss += 0.5 * l2 * sum(float(np.sum(p[k] ** 2)) for k in reg_keys)

    dlogits = np.zeros_like(logits)
    probs = np.exp(logp)
    probs[np.arange(idx.size), labels[idx]] -= 1.0
    dlogits[idx] = probs / idx.size

    T = cache["T"]
    Tt = T.T
    grads = {}
    if "b2" in p:
        grads["b2"] = dlogits.sum(axis=0)
    dZ2 = Tt @ dlogits
    grads["W2"] = cache["Hd"].T @ dZ2
    dH = dZ2 @ p["W2"].T
    if cache["drop_h"] is not None:
        dH = dH * cache["drop_h"]
    dpre = dH * (cache["pre"] > 0)
    if "b1" in p:
        grads["b1"] = dpre.sum(axis=0)
    grads["W1"] = cache["X"].T @ (Tt @ dpre)
    for k in reg_keys:
        grads[k] = grads[k] + l2 * p[k]
    return float(loss), grads


def adam_step(S: ModelState, grads: dict, lr: float) -> None:
    S.step += 1
    t = S.step
    for k, g in grads.items():
        S.m[k] = ADAM_BETA1 * S.m[k] + (1 - ADAM_BETA1) * g
        S.v[k] = ADAM_BETA2 * S.v[k] + (1 - ADAM_BETA2) * g * g
        m_hat = S.m[k] / (1 - ADAM_BETA1 ** t)
        v_hat = S.v[k] / (1 - ADAM_BETA2 ** t)
        S.params[k] = S.params[k] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def predict(S: ModelState, X, T) -> np.ndarray:
    logits, _ = forward(X, T, S)
    return np.argmax(logits, axis=1)  # first maximum, so ties go to the lowest class id


def evaluate(S: ModelState, X, T, labels, mask) -> float:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return float("nan")
    return float(np.mean(predict(S, X, T)[idx] == labels[idx]))


def train(
    T,
    X: np.ndarray,
    labels: np.ndarray,
    splits: SplitMasks,
    cfg: ModelConfig,
    num_classes: int | None = None,
    on_epoch: Callable[[dict], None] | None = None,
) -> tuple[ModelState, list[dict]]:
    """Full-batch training with early stopping.

    Stops after ``cfg.patience`` epochs without a strictly better validation
    accuracy (or at ``cfg.max_epochs``) and returns the parameters of the
    best validation epoch together with the per-epoch history.

    Raises
    ------
    TrainingDivergedError
        If the loss or the activations become non-finite.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    C = int(labels.max()) + 1 if num_classes is None else num_classes
    rng = np.random.default_rng(cfg.seed)
    state = init_state(X.shape[1], cfg.hidden_dim, C, rng, cfg.bias)
    best = state.copy()
    best_val = -np.inf
    wait = 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        try:
            logits, cache = forward(X, T, state, cfg.dropout, rng)
        except FloatingPointError:
            raise TrainingDivergedError(epoch, "activations") from None
        loss, grads = loss_and_grads(logits, labels, splits.train, state, cfg.l2, cache, cfg.l2_first_layer_only)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        if not all(np.isfinite(g_).all() and np.abs(g_).max(initial=0.0) < 1e150 for g_ in grads.values()):
            # squaring in Adam would overflow and silently zero the update
            raise TrainingDivergedError(epoch, "gradients")
        adam_step(state, grads, cfg.lr)
        try:
            val_acc = evaluate(state, X, T, labels, splits.val)
        except FloatingPointError:
            raise TrainingDivergedError(epoch, "activations") from None
        record = {"epoch": epoch, "loss": loss, "val_acc": val_acc}
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if val_acc > best_val:
            best_val, best, wait = val_acc, state.copy(), 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return best, history


@dataclass
class RunResult:
    seed: int
    test_acc: float
    best_val_acc: float
    epochs: int
    history: list = field(default_factory=list, repr=False)


@dataclass
class ExperimentResult:
    scheme: str
    runs: list

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([r.test_acc for r in self.runs])

    @property
    def mean(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std(self) -> float:
        return float(self.accuracies.std())  # population std

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "mean": self.mean,
            "std": self.std,
            "runs": [{"seed": r.seed, "test_acc": r.test_acc, "epochs": r.epochs} for r in self.runs],
        }

    def __repr__(self):
        return f"ExperimentResult({self.scheme}: {self.mean:.4f} +- {self.std:.4f}, n={len(self.runs)})"


def _single_run(args) -> RunResult:
    bundle, T, cfg, threads = args
    with threadpool_limits(threads):
        state, history = train(T, bundle.features, bundle.labels, bundle.splits, cfg, bundle.num_classes)
        acc = evaluate(state, bundle.features, T, bundle.labels, bundle.splits.test)
    best_val = max((h["val_acc"] for h in history), default=float("nan"))
    return RunResult(cfg.seed, acc, best_val, len(history), history)


def run_experiment(
    dataset: DatasetBundle | Callable[[int], DatasetBundle],
    cfg: ModelConfig,
    repeats: int = 10,
    workers: int = 1,
    curvature: CurvatureMap | None = None,
    blas_threads: int | None = 1,
) -> ExperimentResult:
    """Train ``repeats`` times with seeds ``cfg.seed, cfg.seed + 1, ...``.

    ``dataset`` is either a fixed bundle or a factory called with each
    run's seed (for example to redraw features and splits). Curvature is
    computed once per distinct graph and reused; a precomputed
    ``curvature`` is used for the graph whose edges it matches. ``blas_threads=1`` keeps
    every run bitwise reproducible; ``None`` leaves BLAS threading alone.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    seeds = [cfg.seed + r for r in range(repeats)]
    weight_cache: dict[str, WeightedAdjacency] = {}
    curv_cache: dict[str, CurvatureMap] = {}
    jobs = []
    for seed in seeds:
        bundle = dataset(seed) if callable(dataset) else dataset
        key = bundle.graph.content_hash()
        if key not in weight_cache:
            cmap = None
            if cfg.scheme.kind == "curvature":
                cmap = curv_cache.get(key)
                if cmap is None and curvature is not None and np.array_equal(curvature.edges, bundle.graph.edges()):
                    cmap = curvature
                if cmap is None:
                    cmap = curv_cache[key] = graph_curvature(bundle.graph, CurvatureConfig(cfg.scheme.alpha))
            weight_cache[key] = cfg.scheme.weights(bundle.graph, cmap)
        jobs.append((bundle, weight_cache[key], replace(cfg, seed=seed), blas_threads))
    if workers > 1 and repeats > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_single_run, jobs))
    else:
        runs = [_single_run(j) for j in jobs]
    for r in runs:
        logger.info("%s seed=%d test_acc=%.4f epochs=%d", cfg.scheme.label, r.seed, r.test_acc, r.epochs)
    return ExperimentResult(cfg.scheme.label, runs)
