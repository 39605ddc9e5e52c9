"""Command-line entry point: ``curvgraph <command> [flags]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .curvature import CurvatureConfig, edge_curvature_exact, graph_curvature, write_curvature
from .nn import ModelConfig, TrainingDivergedError, WeightScheme, run_experiment, train
from .synth import DEFAULT_SEED, synthetic_dataset, synthetic_graph
from .weights import CNM_KINDS, NCTM_KINDS, NctmMode, WeightError

logger = logging.getLogger("curvgraph")

SCHEMES = ("curvature", "gcn", "mlp")
CNM_CHOICES = ("first", "second", "sym", "none", "1st", "2nd") + CNM_KINDS
NCTM_CHOICES = NCTM_KINDS + ("exp",)
SBM_P_GRID = tuple(round(0.05 + 0.02 * k, 2) for k in range(10))
SBM_Q_GRID = tuple(round(0.005 * k, 3) for k in range(10))


class UsageError(Exception):
    pass


def worker_count(requested: int | None) -> int:
    cap = os.environ.get("CURVGRAPH_THREADS")
    cap = max(1, int(cap)) if cap else None
    if requested is None:
        return cap or 1
    return min(requested, cap) if cap else requested


def _emit(obj, out):
    if out:
        io.write_metrics(out, obj)
    else:
        print(json.dumps(io._jsonable(obj), sort_keys=True))


# --- datasets ---------------------------------------------------------------

def _synthetic_params(text: str) -> tuple[str, dict]:
    model, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        params[k] = int(v) if k in ("m", "n", "classes") else float(v)
    return model, params


def resolve_dataset(name: str, graph_seed: int = DEFAULT_SEED):
    """Factory ``seed -> DatasetBundle`` for a dataset flag value.

    Accepts ``sbm`` / ``er`` / ``ba`` (optionally ``sbm:p=0.15,q=0.025``,
    ``ba:m=5``), a ``.gml`` file (football protocol) or a directory written
    by ``curvgraph synth`` / :func:`io.write_bundle`.
    """
    model, params = _synthetic_params(name)
    if model in ("sbm", "er", "ba") and not Path(name).exists():
        n = params.pop("n", 1000)
        classes = params.pop("classes", 5)
        graph = synthetic_graph(model, graph_seed, n, classes, **params)
        return lambda seed: synthetic_dataset(model, seed=seed, graph=graph)
    path = Path(name)
    if path.suffix.lower() == ".gml" and path.is_file():
        return lambda seed: io.football_bundle(path, seed=seed)
    if path.is_dir():
        bundle = io.read_bundle(path)
        return lambda seed: bundle
    raise UsageError(f"unknown dataset {name!r}")


def _scheme_from_args(args) -> WeightScheme:
    return WeightScheme(args.scheme, NctmMode(args.nctm, args.epsilon), args.cnm, args.alpha)


def _model_config(args, scheme: WeightScheme) -> ModelConfig:
    return ModelConfig(
        hidden_dim=args.hidden, scheme=scheme, lr=args.lr, l2=args.l2,
        l2_first_layer_only=args.l2_first_layer_only, patience=args.patience,
        max_epochs=args.max_epochs, seed=args.seed, dropout=args.dropout, bias=args.bias,
    )


def _model_entry(result, scheme: WeightScheme) -> dict:
    entry = result.summary()
    entry.update(nctm=scheme.nctm.kind, cnm=scheme.cnm, alpha=scheme.alpha, epsilon=scheme.nctm.epsilon,
                 kind=scheme.kind)
    return entry


# --- commands ---------------------------------------------------------------

def cmd_curvature(args) -> int:
    if not 0 <= args.alpha < 1:
        raise UsageError(f"--alpha must lie in [0, 1), got {args.alpha}")
    g = io.read_edgelist(args.edges)
    cfg = CurvatureConfig(args.alpha)
    cmap = graph_curvature(g, cfg, workers=worker_count(args.workers))
    write_curvature(args.out, cmap, args.alpha, g.num_nodes)
    report = {"nodes": g.num_nodes, "edges": g.edge_count, "alpha": args.alpha, "out": str(args.out)}
    if args.oracle_check:
        dev = 0.0
        for (i, j), value in cmap.items():
            dev = max(dev, abs(value - float(edge_curvature_exact(g, (i, j), cfg))))
        report["oracle_max_deviation"] = dev
        report["oracle_ok"] = dev <= 1e-9
    print(json.dumps(report, sort_keys=True))
    return 0 if report.get("oracle_ok", True) else 1


def cmd_synth(args) -> int:
    params = {k: v for k, v in (("p", args.p), ("q", args.q), ("m", args.m)) if v is not None}
    graph = synthetic_graph(args.model, args.graph_seed, args.n, args.classes, **params)
    bundle = synthetic_dataset(args.model, seed=args.seed, graph=graph, dim=args.dim, num_val=args.num_val)
    out = io.write_bundle(args.out, bundle)
    print(json.dumps({"out": str(out), "nodes": bundle.graph.num_nodes, "edges": bundle.graph.edge_count},
                     sort_keys=True))
    return 0


def cmd_train(args) -> int:
    scheme = _scheme_from_args(args)
    cfg = _model_config(args, scheme)
    factory = resolve_dataset(args.dataset, args.graph_seed)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            bundle = factory(cfg.seed)
            T = scheme.weights(bundle.graph)
            train(T, bundle.features, bundle.labels, bundle.splits, cfg, bundle.num_classes,
                  on_epoch=lambda rec: fh.write(json.dumps(rec, sort_keys=True) + "\n"))
    result = run_experiment(factory, cfg, repeats=args.runs, workers=worker_count(args.workers))
    entry = _model_entry(result, scheme)
    out = {
        "dataset": args.dataset,
        "seeds": [r.seed for r in result.runs],
        "mean": entry["mean"],
        "std": entry["std"],
        "runs": entry["runs"],
        "models": {scheme.label: entry},
    }
    _emit(out, args.out)
    return 0


def _sweep_cell(job):
    p, q, schemes, model_kw, runs, graph_seed, n, classes, num_val = job
    graph = synthetic_graph("sbm", graph_seed, n, classes, p=p, q=q)
    curv = graph_curvature(graph[0]) if any(s.kind == "curvature" for s in schemes) else None
    cell = {"p": p, "q": q, "models": {}}
    for scheme in schemes:
        cfg = ModelConfig(scheme=scheme, **model_kw)
        res = run_experiment(lambda seed: synthetic_dataset("sbm", seed=seed, graph=graph, num_val=num_val), cfg,
                             repeats=runs, curvature=curv)
        cell["models"][scheme.label] = _model_entry(res, scheme)
    return cell


def cmd_sweep(args) -> int:
    if args.model != "sbm":
        raise UsageError("only --model sbm is swept")
    if args.grid == "default":
        cells = [(p, q) for p in SBM_P_GRID for q in SBM_Q_GRID]
    else:
        cells = []
        for item in args.grid.split(";"):
            p, q = (float(x) for x in item.split(","))
            cells.append((p, q))
    schemes = [_parse_scheme_token(t, args) for t in args.schemes.split(",")]
    model_kw = dict(hidden_dim=args.hidden, seed=args.seed, patience=args.patience, max_epochs=args.max_epochs)
    jobs = [(p, q, schemes, model_kw, args.runs, args.graph_seed, args.n, args.classes, args.num_val)
            for p, q in cells]
    workers = worker_count(args.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "heatmap.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "q", "scheme", "mean", "std"])
        for cell in results:
            io.write_metrics(out / f"cell_p{cell['p']:.3f}_q{cell['q']:.3f}.json", cell)
            for label, entry in cell["models"].items():
                w.writerow([cell["p"], cell["q"], label, f"{entry['mean']:.17g}", f"{entry['std']:.17g}"])
    print(json.dumps({"cells": len(results), "out": str(out)}, sort_keys=True))
    return 0


def _parse_scheme_token(token: str, args) -> WeightScheme:
    """``gcn``, ``mlp`` or ``<nctm>_<cnm>`` such as ``linear_first``."""
    token = token.strip().lower()
    if token in ("gcn", "mlp"):
        return WeightScheme(token)
    nctm, _, cnm = token.partition("_")
    try:
        return WeightScheme("curvature", NctmMode(nctm, args.epsilon), cnm or "first", args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def run_ablation(factory, base: ModelConfig, runs: int, workers: int = 1, epsilon: float = 1.0) -> dict:
    """Every NCTM x CNM combination; failures are recorded, not raised."""
    table = {}
    curv_cache = {}
    for nctm_kind in NCTM_KINDS:
        for cnm_kind in CNM_KINDS:
            scheme = WeightScheme("curvature", NctmMode(nctm_kind, epsilon), cnm_kind, base.scheme.alpha)
            cfg = replace(base, scheme=scheme)
            bundle = factory(base.seed)
            key = bundle.graph.content_hash()
            if key not in curv_cache:
                curv_cache[key] = graph_curvature(bundle.graph, CurvatureConfig(scheme.alpha))
            try:
                res = run_experiment(factory, cfg, repeats=runs, workers=workers, curvature=curv_cache[key])
            except (WeightError, TrainingDivergedError) as exc:
                table[scheme.label] = {"nctm": nctm_kind, "cnm": cnm_kind, "status": "error",
                                       "error": type(exc).__name__, "message": str(exc)}
                continue
            entry = _model_entry(res, scheme)
            entry["status"] = "ok"
            table[scheme.label] = entry
    return table


def cmd_ablate(args) -> int:
    base = _model_config(args, WeightScheme("curvature", NctmMode("linear", args.epsilon), "first", args.alpha))
    factory = resolve_dataset(args.dataset, args.graph_seed)
    table = run_ablation(factory, base, args.runs, worker_count(args.workers), args.epsilon)
    _emit({"dataset": args.dataset, "seeds": [args.seed + r for r in range(args.runs)],
           "models": table}, args.out)
    return 0


def cmd_football(args) -> int:
    factory = resolve_dataset(args.gml)
    models = {}
    for scheme in (WeightScheme("gcn"),
                   WeightScheme("curvature", NctmMode(args.nctm, args.epsilon), args.cnm, args.alpha)):
        cfg = _model_config(args, scheme)
        res = run_experiment(factory, cfg, repeats=args.runs, workers=worker_count(args.workers))
        entry = _model_entry(res, scheme)
        entry["median"] = float(np.median(res.accuracies))
        models[scheme.label] = entry
    _emit({"dataset": str(args.gml), "seeds": [args.seed + r for r in range(args.runs)], "models": models},
          args.out)
    return 0


# --- parser -----------------------------------------------------------------

def _add_model_flags(p, hidden: int):
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--nctm", choices=NCTM_CHOICES, default="linear")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--cnm", choices=CNM_CHOICES, default="first")
    p.add_argument("--hidden", type=int, default=hidden)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--l2", type=float, default=0.0005)
    p.add_argument("--l2-first-layer-only", action="store_true")
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--bias", action="store_true")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--graph-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvgraph", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="per-edge Ricci curvature of an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("synth", help="write a synthetic dataset bundle")
    p.add_argument("--model", choices=("sbm", "er", "ba"), required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--num-val", type=int, default=300)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--graph-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="repeated training runs of one model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scheme", choices=SCHEMES, default="curvature")
    p.add_argument("--history", default=None, help="JSON-lines history of the first run")
    _add_model_flags(p, hidden=8)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="SBM (p, q) grid")
    p.add_argument("--model", default="sbm")
    p.add_argument("--grid", default="default", help="'default' or 'p,q;p,q;...'")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--num-val", type=int, default=300)
    p.add_argument("--schemes", default="gcn,linear_first")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--graph-seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="all NCTM x CNM combinations")
    p.add_argument("--dataset", required=True)
    _add_model_flags(p, hidden=8)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("football", help="GCN vs CGNN on a football-style GML file")
    p.add_argument("--gml", required=True)
    _add_model_flags(p, hidden=64)
    p.set_defaults(func=cmd_football)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError, WeightError, TrainingDivergedError) as exc:
        print(f"curvgraph {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
