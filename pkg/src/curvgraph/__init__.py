"""Ollivier-Ricci curvature, curvature-derived aggregation weights and a
curvature-weighted two-layer GNN."""

from .curvature import (
    CurvatureConfig,
    CurvatureMap,
    edge_curvature,
    edge_curvature_exact,
    graph_curvature,
    node_measure,
)
from .graph import Graph, build_graph, restricted_distances
from .io import DatasetBundle, SplitMasks
from .nn import ModelConfig, WeightScheme, evaluate, run_experiment, train
from .transport import DiscreteMeasure, TransportProblem, wasserstein1, wasserstein1_oracle
from .weights import NctmMode, WeightedAdjacency, build_weights, cnm, inject_self_loops, nctm

__version__ = "0.1.0"

__all__ = [
    "CurvatureConfig", "CurvatureMap", "DatasetBundle", "DiscreteMeasure", "Graph",
    "ModelConfig", "NctmMode", "SplitMasks", "TransportProblem", "WeightScheme",
    "WeightedAdjacency", "build_graph", "build_weights", "cnm", "edge_curvature",
    "edge_curvature_exact", "evaluate", "graph_curvature", "inject_self_loops", "nctm",
    "node_measure", "restricted_distances", "run_experiment", "train", "wasserstein1",
    "wasserstein1_oracle",
]
