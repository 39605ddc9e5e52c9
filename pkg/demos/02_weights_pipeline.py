"""From curvature to aggregation weights.

The pipeline injects self-loops with curvature 1, makes every value
positive (shift or logistic), then normalises by curvature-degrees. With
uniform curvature and symmetric normalisation it collapses to the GCN
propagation matrix; skipping the positivity step can make the symmetric
variant undefined.
"""

import numpy as np

from curvgraph import NctmMode, build_graph, build_weights, graph_curvature, inject_self_loops, nctm
from curvgraph.weights import ImaginaryWeightError, cnm, curvature_degrees, gcn_weights

k3 = build_graph([(0, 1), (1, 2), (0, 2)])
t = build_weights(k3, nctm_mode=NctmMode("linear", 1.0), cnm_kind="first_hop")
print("K3 first-hop weights for target 0:", {j: round(v, 6) for j, v in t.row(0).items()})
print("  expected self 1.25/3.25 =", round(1.25 / 3.25, 6), " neighbours 1/3.25 =", round(1 / 3.25, 6))

g = build_graph([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4)])
gcn = gcn_weights(g)
d = g.degree() + 1.0
rows, cols, vals = gcn.entries()
print("\nGCN weights equal 1/sqrt(d_i d_j):", np.array_equal(vals, 1 / np.sqrt(d[rows] * d[cols])))

for kind in ("first_hop", "second_hop", "symmetric"):
    w = build_weights(g, nctm_mode=NctmMode("sigmoid"), cnm_kind=kind)
    print(f"{kind:<11} row sums {np.round(w.row_sums(), 3)}  column sums {np.round(w.col_sums(), 3)}")

# a root joined to three hubs, each with five leaves: bridge-like edges everywhere at the root
edges, nxt = [], 4
for h in (1, 2, 3):
    edges.append((0, h))
    for _ in range(5):
        edges.append((h, nxt))
        nxt += 1
tree = build_graph(edges)
raw = inject_self_loops(graph_curvature(tree), tree)
print("\nroot curvature-degree without a positivity transform:", curvature_degrees(raw)[0])
try:
    cnm(nctm(raw, NctmMode("none")), "symmetric")
except ImaginaryWeightError as exc:
    print("symmetric normalisation refuses:", exc)
w = cnm(nctm(raw, NctmMode("linear")), "symmetric")
print("after the linear shift every weight is positive:", bool((w.data > 0).all()))
