"""Tour of Ollivier-Ricci curvature on small graphs.

Each number printed is computed twice: by the float min-cost-flow solver
and by the exact integer oracle. Curvature is positive where the two
neighbourhoods overlap (triangles), zero on flat grids, and negative on
bridges between hubs.
"""

from curvgraph import build_graph, edge_curvature, edge_curvature_exact, graph_curvature


def show(title, g, edge):
    value = edge_curvature(g, edge)
    exact = edge_curvature_exact(g, edge)
    print(f"{title:<32} edge {edge}: {value:+.6f}   exact {exact}")


def grid(rows, cols):
    at = lambda r, c: r * cols + c
    edges = [(at(r, c), at(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(at(r, c), at(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return build_graph(edges)


if __name__ == "__main__":
    show("triangle K3", build_graph([(0, 1), (1, 2), (0, 2)]), (0, 1))
    show("path a-b-c", build_graph([(0, 1), (1, 2)]), (0, 1))
    show("10x10 grid, interior", grid(10, 10), (44, 45))
    show("10x10 grid, corner", grid(10, 10), (0, 1))

    # two 6-cliques joined by a single bridge 0-6
    clique = [(i, j) for i in range(6) for j in range(i + 1, 6)]
    barbell = build_graph(clique + [(i + 6, j + 6) for i, j in clique] + [(0, 6)])
    show("barbell bridge", barbell, (0, 6))
    show("barbell clique edge", barbell, (1, 2))

    c = graph_curvature(barbell)
    print(f"\nbarbell: {len(c)} edges, min {c.values.min():+.4f}, max {c.values.max():+.4f}")
    print("the single negative edge is the bridge:", [e for e, v in c.items() if v < 0])
