"""Exact Wasserstein-1 distance between finitely supported measures.

The main solver runs successive shortest paths on the bipartite
transportation network in float64. Working on the flow formulation means
there are no degenerate simplex pivots to perturb: every augmentation
either drains a supply, fills a demand, or empties a reverse arc.

:func:`wasserstein1_oracle` answers the same question with integer
arithmetic only and is meant for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import networkx as nx
import numba
import numpy as np

MASS_TOL = 1e-12
_EXCESS_TOL = 1e-14


class InfeasibleTransportError(ValueError):
    """Some mass can only be moved along infinite-cost routes."""


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on a finite set of node ids.

    ``masses`` is float64, or an object array of :class:`fractions.Fraction`
    for exact measures (which must then sum to exactly one).
    """

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        masses = np.asarray(self.masses)
        if masses.dtype != object:
            masses = masses.astype(np.float64)
        if support.ndim != 1 or support.shape != masses.shape:
            raise ValueError("support and masses must be 1-d and of equal length")
        if np.unique(support).shape[0] != support.shape[0]:
            raise ValueError("support ids must be unique")
        if support.shape[0] == 0:
            raise ValueError("measure has empty support")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be strictly positive")
        total = sum(masses) if masses.dtype == object else float(masses.sum())
        if masses.dtype == object:
            if total != 1:
                raise ValueError(f"exact masses sum to {total}, not 1")
        elif abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1 within {MASS_TOL}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)

    @property
    def exact(self) -> bool:
        return self.masses.dtype == object

    def __len__(self):
        return self.support.shape[0]

    def as_dict(self) -> dict:
        return {int(s): m for s, m in zip(self.support, self.masses)}

    @classmethod
    def point(cls, node: int, exact: bool = False) -> "DiscreteMeasure":
        mass = np.array([Fraction(1)], dtype=object) if exact else np.ones(1)
        return cls(np.array([node]), mass)


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """Cost table indexed ``(supply.support x demand.support)``."""

    supply: DiscreteMeasure
    demand: DiscreteMeasure
    cost: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.shape != (len(self.supply), len(self.demand)):
            raise ValueError(
                f"cost shape {cost.shape} does not match supports "
                f"({len(self.supply)}, {len(self.demand)})"
            )
        if np.isnan(cost).any() or (cost < 0).any():
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "cost", cost)

    def reversed(self) -> "TransportProblem":
        return TransportProblem(self.demand, self.supply, self.cost.T)


@numba.njit(cache=True)
def _ssp(supply, demand, cost, tol):
    m = supply.shape[0]
    n = demand.shape[0]
    V = m + n
    excess = supply.copy()
    deficit = demand.copy()
    flow = np.zeros((m, n))
    pot = np.zeros(V)
    dist = np.empty(V)
    pred = np.empty(V, dtype=np.int64)
    done = np.empty(V, dtype=np.bool_)
    while True:
        active = False
        for u in range(m):
            if excess[u] > tol:
                active = True
                break
        if not active:
            break
        for x in range(V):
            dist[x] = np.inf
            pred[x] = -1
            done[x] = False
        for u in range(m):
            if excess[u] > tol:
                dist[u] = 0.0
        sink = -1
        while True:
            best = np.inf
            x = -1
            for y in range(V):
                if not done[y] and dist[y] < best:
                    best = dist[y]
                    x = y
            if x < 0:
                break
            done[x] = True
            if x >= m and deficit[x - m] > tol:
                sink = x
                break
            if x < m:
                for v in range(n):
                    c = cost[x, v]
                    if c == np.inf or done[m + v]:
                        continue
                    d = best + c + pot[x] - pot[m + v]
                    if d < dist[m + v]:
                        dist[m + v] = d
                        pred[m + v] = x
            else:
                v = x - m
                for u in range(m):
                    if flow[u, v] <= 0.0 or done[u]:
                        continue
                    d = best - cost[u, v] + pot[x] - pot[u]
                    if d < dist[u]:
                        dist[u] = d
                        pred[u] = x
        if sink < 0:
            return np.nan, flow
        cap = dist[sink]
        for x in range(V):
            pot[x] += min(dist[x], cap)
        # bottleneck along the path back to a source with excess
        delta = deficit[sink - m]
        x = sink
        while pred[x] >= 0:
            p = pred[x]
            if p >= m:
                delta = min(delta, flow[x, p - m])
            x = p
        delta = min(delta, excess[x])
        excess[x] -= delta
        deficit[sink - m] -= delta
        x = sink
        while pred[x] >= 0:
            p = pred[x]
            if p < m:
                flow[p, x - m] += delta
            else:
                flow[x, p - m] -= delta
            x = p
    total = 0.0
    for u in range(m):
        for v in range(n):
            if flow[u, v] > 0.0:
                total += flow[u, v] * cost[u, v]
    return total, flow


def transport_plan(p: TransportProblem) -> tuple[float, np.ndarray]:
    """Optimal value and coupling (rows: supply support, cols: demand support)."""
    a = np.asarray(p.supply.masses, dtype=np.float64)
    b = np.asarray(p.demand.masses, dtype=np.float64)
    value, plan = _ssp(a, b, p.cost, _EXCESS_TOL)
    if np.isnan(value):
        raise InfeasibleTransportError("remaining mass cannot reach any demand at finite cost")
    return float(value), plan


def wasserstein1(p: TransportProblem) -> float:
    """Minimum of ``sum(plan * cost)`` over couplings of supply and demand.

    Raises
    ------
    InfeasibleTransportError
        If the demand cannot be met through finite-cost routes.
    """
    return transport_plan(p)[0]


def _as_fractions(masses, max_denominator):
    if masses.dtype == object:
        return [Fraction(m) for m in masses]
    if max_denominator is None:
        raise ValueError("float masses need max_denominator to be read as rationals")
    return [Fraction(float(m)).limit_denominator(max_denominator) for m in masses]


def wasserstein1_oracle(p: TransportProblem, max_denominator: int | None = None) -> Fraction:
    """Exact optimum via integer min-cost flow.

    Masses are scaled to integers by their common denominator and costs
    must be integral (hop counts); the flow is solved with networkx's
    network simplex, which is exact on integer data.

    Float masses are read as the nearest rational with denominator at most
    ``max_denominator``; exact (``Fraction``) measures need no bound.
    """
    a = _as_fractions(p.supply.masses, max_denominator)
    b = _as_fractions(p.demand.masses, max_denominator)
    if sum(a) != 1 or sum(b) != 1:
        raise ValueError("rational masses do not sum to exactly 1")
    finite = np.isfinite(p.cost)
    if not np.array_equal(p.cost[finite], np.round(p.cost[finite])):
        raise ValueError("oracle requires integer costs")
    scale = lcm(*(f.denominator for f in a + b))
    G = nx.DiGraph()
    for u, mass in enumerate(a):
        G.add_node(("s", u), demand=-int(mass * scale))
    for v, mass in enumerate(b):
        G.add_node(("t", v), demand=int(mass * scale))
    for u in range(len(a)):
        for v in range(len(b)):
            if finite[u, v]:
                G.add_edge(("s", u), ("t", v), weight=int(p.cost[u, v]))
    try:
        value = nx.min_cost_flow_cost(G)
    except nx.NetworkXUnfeasible as exc:
        raise InfeasibleTransportError(str(exc)) from exc
    return Fraction(value, scale)
