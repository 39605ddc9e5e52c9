"""Acceptance checks, one per criterion.

Each check prints a single ``[PASS]`` / ``[FAIL]`` / ``[SKIP]`` line with the
measured numbers. Run with pytest, or standalone:

    python3 tests/test_acceptance.py [criterion numbers...]

Tolerances are fixed constants below; they are never loosened to make a
run pass.
"""

from __future__ import annotations

import functools
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from curvgraph import ModelConfig, WeightScheme, build_graph, graph_curvature, run_experiment, train
from curvgraph.cli import run_ablation
from curvgraph.curvature import edge_curvature, edge_curvature_exact
from curvgraph.io import DatasetBundle, SplitMasks, football_bundle, read_bundle
from curvgraph.nn import forward, init_state
from curvgraph.synth import synthetic_dataset, synthetic_graph
from curvgraph.transport import TransportProblem, wasserstein1, wasserstein1_oracle
from curvgraph.weights import ImaginaryWeightError, NctmMode, build_weights, cnm, gcn_weights, inject_self_loops, nctm

from conftest import complete_graph, grid_graph, hub_tree, random_graph
from test_nn import max_gradient_error
from test_transport import as_float, random_problem

ROOT = Path(__file__).resolve().parents[1]

TRANSPORT_TOL = 1e-9
CURVATURE_TOL = 1e-9
GCN_TOL = 1e-12
GRAD_TOL = 1e-5
SBM_GAP = 0.05
SBM_FLOOR = 0.50
ER_BAND = (0.14, 0.26)
BA_FLOOR = 0.18
FOOTBALL_FLOOR = 0.75
FOOTBALL_SLACK = 0.02
ABLATION_DROP = 0.10
CORA_CGNN_BAND = (0.79, 0.86)
CORA_GCN_BAND = (0.78, 0.84)
STOCHASTIC_TOL = 1e-12
PROPERTY_CASES = 50
ORDER_RESOLUTION = 1e-12

RUNS = 10
HIDDEN = 8
CGNN = WeightScheme("curvature", NctmMode("linear", 1.0), "first_hop")
GCN = WeightScheme("gcn")
MLP = WeightScheme("mlp")


def report(number: int, title: str, ok: bool | None, detail: str) -> None:
    tag = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
    line = f"[{tag}] criterion {number:>2} {title}: {detail}"
    capman = _capture_manager
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


_capture_manager = None


@pytest.fixture(autouse=True)
def _expose_capture(request):
    global _capture_manager
    _capture_manager = request.config.pluginmanager.getplugin("capturemanager")
    yield
    _capture_manager = None


# --- shared experiment results ------------------------------------------------

@functools.cache
def synthetic(model: str, **params):
    graph = synthetic_graph(model, **params)
    return graph, graph_curvature(graph[0])


@functools.cache
def experiment(model: str, scheme: WeightScheme, params: tuple = ()):
    graph, curv = synthetic(model, **dict(params))
    cfg = ModelConfig(hidden_dim=HIDDEN, scheme=scheme)
    return run_experiment(lambda seed: synthetic_dataset(model, seed=seed, graph=graph), cfg, repeats=RUNS,
                          curvature=curv)


# --- 1 ------------------------------------------------------------------------

def check_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20200)
    worst = 0.0
    for _ in range(200):
        a, b, cost = random_problem(rng)
        exact = wasserstein1_oracle(TransportProblem(a, b, cost))
        approx = wasserstein1(TransportProblem(as_float(a), as_float(b), cost))
        worst = max(worst, abs(approx - float(exact)))
    elapsed = time.perf_counter() - t0
    ok = worst <= TRANSPORT_TOL and elapsed < 5
    return ok, f"200 problems, max |float - oracle| = {worst:.3g} (<= {TRANSPORT_TOL}), {elapsed:.2f}s (< 5s)"


# --- 2 ------------------------------------------------------------------------

def check_2():
    t0 = time.perf_counter()
    cases = [
        ("K3", complete_graph(3), (0, 1), Fraction(3, 4)),
        ("P3 end", build_graph([(0, 1), (1, 2)]), (0, 1), Fraction(1, 2)),
        ("grid interior", grid_graph(10, 10), (44, 45), Fraction(0)),
    ]
    parts, ok = [], True
    for name, g, e, expected in cases:
        exact = edge_curvature_exact(g, e)
        value = edge_curvature(g, e)
        good = exact == expected and abs(value - float(exact)) <= CURVATURE_TOL
        ok &= good
        parts.append(f"{name}={value:.12g}")
    # every edge whose endpoints and their neighbours sit >= 2 hops from the boundary
    grid = grid_graph(10, 10)
    interior = [tuple(e) for e in grid.edges() if all(2 <= v // 10 <= 7 and 2 <= v % 10 <= 7 for v in e)]
    worst = max(abs(edge_curvature(grid, e)) for e in interior)
    ok &= worst <= CURVATURE_TOL
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5
    return ok, ", ".join(parts) + f"; {len(interior)} interior grid edges max |r| = {worst:.2g}; {elapsed:.2f}s"


# --- 3 ------------------------------------------------------------------------

def check_3():
    rng = np.random.default_rng(3)
    worst, bitwise = 0.0, 0
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(5, 60)), rng.uniform(0.05, 0.4))
        t = gcn_weights(g)
        d = g.degree() + 1.0
        rows, cols, vals = t.entries()
        ref = np.array([1.0 / math.sqrt(d[i] * d[j]) for i, j in zip(rows, cols)])
        bitwise += int(np.array_equal(vals, ref))
        worst = max(worst, float(np.max(np.abs(vals - ref))))
    ok = worst <= GCN_TOL
    return ok, f"20 graphs, {bitwise}/20 bitwise identical, max deviation {worst:.3g} (<= {GCN_TOL})"


# --- 4 ------------------------------------------------------------------------

def check_4():
    t0 = time.perf_counter()
    errs = [max_gradient_error(seed) for seed in (101, 202, 303)]
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= GRAD_TOL and elapsed < 10
    return ok, f"relative errors {', '.join(f'{e:.2g}' for e in errs)} (<= {GRAD_TOL}), {elapsed:.2f}s"


# --- 5 ------------------------------------------------------------------------

def check_5():
    t0 = time.perf_counter()
    cgnn = experiment("sbm", CGNN)
    gcn = experiment("sbm", GCN)
    elapsed = time.perf_counter() - t0
    gap = cgnn.mean - gcn.mean
    ok = gap >= SBM_GAP and cgnn.mean >= SBM_FLOOR and elapsed < 600
    return ok, (f"SBM(0.15, 0.025) {cgnn.scheme} {100 * cgnn.mean:.1f}±{100 * cgnn.std:.1f} vs "
                f"GCN {100 * gcn.mean:.1f}±{100 * gcn.std:.1f}; gap {100 * gap:.2f} pts (need >= {100 * SBM_GAP:.0f}), "
                f"CGNN >= {SBM_FLOOR:.0%}: {cgnn.mean >= SBM_FLOOR}; {elapsed:.0f}s")


# --- 6 ------------------------------------------------------------------------

ER_SCHEMES = (MLP, GCN) + tuple(
    WeightScheme("curvature", NctmMode(k), c) for k in ("linear", "sigmoid") for c in ("first", "second", "sym")
)


def check_6():
    t0 = time.perf_counter()
    means = {s.label: experiment("er", s).mean for s in ER_SCHEMES}
    elapsed = time.perf_counter() - t0
    lo, hi = ER_BAND
    ok = all(lo <= m <= hi for m in means.values()) and elapsed < 300
    body = ", ".join(f"{k} {100 * v:.1f}" for k, v in means.items())
    return ok, f"ER(0.01) {body}; band [{lo}, {hi}]; {elapsed:.0f}s"


# --- 7 ------------------------------------------------------------------------

def check_7():
    t0 = time.perf_counter()
    cgnn = experiment("ba", CGNN, (("m", 5),))
    gcn = experiment("ba", GCN, (("m", 5),))
    elapsed = time.perf_counter() - t0
    ok = gcn.mean >= cgnn.mean and cgnn.mean >= BA_FLOOR and elapsed < 300
    return ok, (f"BA(m=5) GCN {100 * gcn.mean:.1f} >= {cgnn.scheme} {100 * cgnn.mean:.1f}: {gcn.mean >= cgnn.mean}; "
                f"CGNN >= {BA_FLOOR}: {cgnn.mean >= BA_FLOOR}; {elapsed:.0f}s")


# --- 8 ------------------------------------------------------------------------

def football_path() -> Path | None:
    for cand in (os.environ.get("CURVGRAPH_FOOTBALL"), ROOT / "data" / "football.gml"):
        if cand and Path(cand).is_file():
            return Path(cand)
    return None


def check_8():
    path = football_path()
    if path is None:
        return False, "football.gml not found (set CURVGRAPH_FOOTBALL or place it at data/football.gml)"
    t0 = time.perf_counter()
    factory = lambda seed: football_bundle(path, seed=seed)
    med = {}
    for scheme in (GCN, CGNN):
        res = run_experiment(factory, ModelConfig(scheme=scheme), repeats=RUNS)
        med[scheme.label] = float(np.median(res.accuracies))
    elapsed = time.perf_counter() - t0
    c, g = med[CGNN.label], med["GCN"]
    ok = c >= FOOTBALL_FLOOR and c >= g - FOOTBALL_SLACK and elapsed < 120
    return ok, f"median {CGNN.label} {c:.3f} (>= {FOOTBALL_FLOOR}), GCN {g:.3f} (CGNN >= GCN - {FOOTBALL_SLACK}); {elapsed:.0f}s"


# --- 9 ------------------------------------------------------------------------

def _tree_bundle():
    g = hub_tree()
    n = g.num_nodes
    labels = (np.arange(n) > 3).astype(int)
    train = np.zeros(n, bool)
    train[[0, 4]] = True
    return DatasetBundle(g, np.eye(n), labels, SplitMasks(train, train.copy(), ~train))


def check_9():
    bundle = _tree_bundle()
    c = inject_self_loops(graph_curvature(bundle.graph), bundle.graph)
    raised = False
    try:
        cnm(nctm(c, NctmMode("none")), "symmetric")
    except ImaginaryWeightError as exc:
        raised = exc.node == 0
    table = run_ablation(lambda seed: bundle, ModelConfig(hidden_dim=4, max_epochs=20), runs=1)
    recorded = table["CGNN_None_Sym"].get("error") == "ImaginaryWeightError"
    completed = len(table) == 12
    bare = experiment("sbm", WeightScheme("curvature", NctmMode("none"), "none"))
    # Linear_1st is one of the CGNN configurations, so beating it by the margin implies the same for the best one
    ref = experiment("sbm", CGNN)
    drop = ref.mean - bare.mean
    ok = raised and recorded and completed and drop >= ABLATION_DROP
    return ok, (f"(none, sym) on tree -> ImaginaryWeightError at node 0: {raised}, recorded in ablation table: "
                f"{recorded} ({len(table)} cells); SBM CGNN_None_None {100 * bare.mean:.1f} vs {ref.scheme} "
                f"{100 * ref.mean:.1f}, drop {100 * drop:.1f} pts (need >= {100 * ABLATION_DROP:.0f})")


# --- 10 -----------------------------------------------------------------------

def cora_dir() -> Path | None:
    for cand in (os.environ.get("CURVGRAPH_CORA"), ROOT / "data" / "cora"):
        if cand and (Path(cand) / "edges.txt").is_file():
            return Path(cand)
    return None


def check_10():
    d = cora_dir()
    if d is None:
        return None, "Cora bundle not supplied (CURVGRAPH_CORA or data/cora with edges/features/labels/splits)"
    bundle = read_bundle(d)
    curv = graph_curvature(bundle.graph)
    exp1st = WeightScheme("curvature", NctmMode("sigmoid"), "first_hop")
    means = {}
    for scheme in (exp1st, GCN):
        cfg = ModelConfig(hidden_dim=64, scheme=scheme, dropout=0.5)
        means[scheme.label] = run_experiment(bundle, cfg, repeats=20, curvature=curv).mean
    c, g = means[exp1st.label], means["GCN"]
    ok = CORA_CGNN_BAND[0] <= c <= CORA_CGNN_BAND[1] and CORA_GCN_BAND[0] <= g <= CORA_GCN_BAND[1]
    return ok, f"{exp1st.label} {c:.3f} in {CORA_CGNN_BAND}, GCN {g:.3f} in {CORA_GCN_BAND}"


# --- 11 -----------------------------------------------------------------------

def check_11():
    rng = np.random.default_rng(11)
    counts = dict.fromkeys(("row-stochastic", "col-stochastic", "order", "equivariance", "determinism"), 0)
    failures = []
    for case in range(PROPERTY_CASES):
        g = random_graph(rng, int(rng.integers(5, 25)), rng.uniform(0.1, 0.5))
        curv = graph_curvature(g)
        mode = [NctmMode("linear", 1.0), NctmMode("linear", 0.25), NctmMode("sigmoid")][case % 3]
        t1 = build_weights(g, nctm_mode=mode, cnm_kind="first_hop", curvature=curv)
        t2 = build_weights(g, nctm_mode=mode, cnm_kind="second_hop", curvature=curv)
        if np.abs(t1.row_sums() - 1).max() <= STOCHASTIC_TOL:
            counts["row-stochastic"] += 1
        else:
            failures.append(("row", case))
        if np.abs(t2.col_sums() - 1).max() <= STOCHASTIC_TOL:
            counts["col-stochastic"] += 1
        else:
            failures.append(("col", case))

        full = inject_self_loops(curv, g)
        out = nctm(full, mode).values
        order = np.argsort(full.values, kind="stable")
        v, o = full.values[order], out[order]
        # distinct curvatures are rationals far apart; gaps below ORDER_RESOLUTION are solver round-off
        strict = v[1:] - v[:-1] > ORDER_RESOLUTION
        if (o[1:] >= o[:-1]).all() and (o[1:][strict] > o[:-1][strict]).all():
            counts["order"] += 1
        else:
            failures.append(("order", case))

        perm = rng.permutation(g.num_nodes)
        gp = g.permute(perm)
        X = rng.standard_normal((g.num_nodes, 4))
        Xp = np.empty_like(X)
        Xp[perm] = X
        S = init_state(4, 5, 3, np.random.default_rng(case))
        lg, _ = forward(X, build_weights(g, nctm_mode=mode, curvature=curv), S)
        lp, _ = forward(Xp, build_weights(gp, nctm_mode=mode), S)
        if np.abs(lp[perm] - lg).max() <= 1e-12:
            counts["equivariance"] += 1
        else:
            failures.append(("equivariance", case))

        labels = rng.integers(0, 3, size=g.num_nodes)
        mask = rng.random(g.num_nodes) < 0.5
        mask[0] = True
        splits = SplitMasks(mask, ~mask, ~mask)
        cfg = ModelConfig(hidden_dim=4, max_epochs=15, seed=case)
        _, h1 = train(t1, X, labels, splits, cfg, 3)
        _, h2 = train(t1, X, labels, splits, cfg, 3)
        if h1 == h2:
            counts["determinism"] += 1
        else:
            failures.append(("determinism", case))
    ok = not failures and all(c >= PROPERTY_CASES for c in counts.values())
    detail = ", ".join(f"{k} {v}/{PROPERTY_CASES}" for k, v in counts.items())
    return ok, detail + (f"; first failures {failures[:3]}" if failures else "")


# --- pytest and standalone drivers --------------------------------------------

TITLES = {
    1: "transport oracle equivalence",
    2: "curvature fixtures",
    3: "GCN equivalence",
    4: "gradient check",
    5: "SBM separation",
    6: "Erdos-Renyi chance level",
    7: "Barabasi-Albert ordering",
    8: "football",
    9: "ablation behaviour",
    10: "Cora (optional)",
    11: "property suites",
}
CHECKS = {n: globals()[f"check_{n}"] for n in TITLES}


@pytest.mark.parametrize("number", list(TITLES), ids=[f"criterion_{n}" for n in TITLES])
def test_criterion(number):
    ok, detail = CHECKS[number]()
    report(number, TITLES[number], ok, detail)
    if ok is None:
        pytest.skip(detail)
    assert ok, detail


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or list(TITLES)
    status = 0
    for n in wanted:
        ok, detail = CHECKS[n]()
        report(n, TITLES[n], ok, detail)
        status |= ok is False
    sys.exit(status)
