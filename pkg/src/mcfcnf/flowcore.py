"""Exact solver for the scaled-fixed-cost flow relaxation.

Every offered (edge, capacity class) pair becomes one arc with capacity c_k
and unit cost fixed/scale + variable, so the relaxation reduces to a plain
min-cost flow of the target amount from source to sink. The solver is
successive shortest augmenting paths with vertex potentials: exact,
dependency-free, and deterministic (ties resolved by lowest arc index).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

if TYPE_CHECKING:
    from .instance import Instance

#: Scale value meaning "the scaled fixed cost is exactly zero". IEEE infinity
#: divides any finite fixed cost to an exact 0.0, with no overflow.
UNBOUNDED = math.inf

#: Global floor for finite scale entries.
D_MIN = 1e-6


class Infeasible(Exception):
    """The network cannot carry the target flow amount."""

    def __init__(self, message: str, max_flow: float = 0.0):
        super().__init__(message)
        self.max_flow = max_flow


class FlowIterationError(RuntimeError):
    """Augmentation count exceeded the safety cap (pathological input)."""


@dataclass(frozen=True, eq=False)
class Organism:
    """Array of fixed-cost divisors, one per (edge, capacity class) pair.

    Finite entries must respect the global D_MIN floor; UNBOUNDED entries
    zero out the fixed cost entirely.
    """

    scale: np.ndarray

    def __post_init__(self):
        scale = np.array(self.scale, dtype=np.float64)
        if np.isnan(scale).any():
            raise ValueError("scale entries must not be NaN")
        finite = scale[np.isfinite(scale)]
        if finite.size and finite.min() < D_MIN * (1 - 1e-12):
            raise ValueError(f"finite scale entries must be >= {D_MIN}")
        scale.setflags(write=False)
        object.__setattr__(self, "scale", scale)


class Arc(NamedTuple):
    src: int
    dst: int
    capacity: float
    unit_cost: float
    origin: tuple[int, int]  # (edge index, capacity class index)


@dataclass(frozen=True)
class ArcNetwork:
    """Capacity-expanded network: one arc per offered (edge, class) pair."""

    n_vertices: int
    source: int
    sink: int
    target: float
    arcs: tuple[Arc, ...]
    pair_shape: tuple[int, int]


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """Flow amounts per (edge, class) pair and the relaxation objective."""

    flow: np.ndarray
    lp_cost: float

    def __post_init__(self):
        flow = np.array(self.flow, dtype=np.float64)
        flow.setflags(write=False)
        object.__setattr__(self, "flow", flow)


def build_expanded_network(instance: Instance, organism: Organism) -> ArcNetwork:
    """Expand an instance under an organism's fixed-cost divisors."""
    shape = (instance.n_edges, instance.n_capacities)
    if organism.scale.shape != shape:
        raise ValueError(f"organism shape {organism.scale.shape} does not match "
                         f"instance (edges, capacities) {shape}")
    cost = instance.fixed_cost / organism.scale + instance.variable_cost
    return _assemble_network(instance, cost)


def slope_scaled_costs(instance: Instance) -> np.ndarray:
    """Per-pair unit costs with the fixed charge linearized over the full
    capacity (divisor equal to the class capacity)."""
    scale = np.broadcast_to(np.maximum(instance.capacities, D_MIN),
                            (instance.n_edges, instance.n_capacities))
    return instance.fixed_cost / scale + instance.variable_cost


def _assemble_network(instance: Instance, cost: np.ndarray,
                      skip_pairs: frozenset[int] | None = None) -> ArcNetwork:
    avail = instance.available
    caps = instance.capacities.tolist()
    cost_rows = cost.tolist()
    n_caps = instance.n_capacities
    arcs = []
    for e, (u, w) in enumerate(instance.edges):
        row_avail = avail[e]
        row_cost = cost_rows[e]
        for k in range(n_caps):
            if not row_avail[k]:
                continue
            if skip_pairs is not None and e * n_caps + k in skip_pairs:
                continue
            arcs.append(Arc(u, w, caps[k], row_cost[k], (e, k)))
    return ArcNetwork(
        n_vertices=instance.n_vertices, source=instance.source, sink=instance.sink,
        target=instance.target, arcs=tuple(arcs),
        pair_shape=(instance.n_edges, n_caps),
    )


def solve_min_cost_flow(net: ArcNetwork) -> FlowSolution:
    """Route the target amount from source to sink at minimum cost.

    Requires nonnegative unit costs. Raises Infeasible (carrying the achieved
    max flow) when the network cannot deliver the target.
    """
    n = net.n_vertices
    s, t = net.source, net.sink
    m = len(net.arcs)
    target = net.target

    # residual ids: 2i forward for arc i, 2i+1 its reversal
    head = [0] * (2 * m)
    rcost = [0.0] * (2 * m)
    res = [0.0] * (2 * m)
    adj: list[list[int]] = [[] for _ in range(n)]
    arc_cost = [0.0] * m
    for i, arc in enumerate(net.arcs):
        if arc.unit_cost < 0:
            raise ValueError(f"arc {i} has negative unit cost {arc.unit_cost}")
        head[2 * i] = arc.dst
        head[2 * i + 1] = arc.src
        rcost[2 * i] = arc.unit_cost
        rcost[2 * i + 1] = -arc.unit_cost
        res[2 * i] = arc.capacity
        arc_cost[i] = arc.unit_cost
        adj[arc.src].append(2 * i)
        adj[arc.dst].append(2 * i + 1)

    pot = [0.0] * n
    inf = math.inf
    remaining = target
    push_cap = 4 * m + 16
    pushes = 0

    while remaining > 1e-12 * max(1.0, target):
        pushes += 1
        if pushes > push_cap:
            raise FlowIterationError(
                f"augmentation count exceeded {push_cap} on {m} arcs")

        dist = [inf] * n
        done = [False] * n
        parent = [-1] * n
        dist[s] = 0.0
        heap = [(0.0, 0, s)]
        counter = 1
        dist_t = inf
        while heap:
            d, _, u = heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if u == t:
                dist_t = d
                break
            pu = pot[u]
            for rid in adj[u]:
                if res[rid] <= 0.0:
                    continue
                v = head[rid]
                if done[v]:
                    continue
                nd = d + rcost[rid] + pu - pot[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = rid
                    heappush(heap, (nd, counter, v))
                    counter += 1

        if dist_t == inf:
            achieved = target - remaining
            raise Infeasible(
                f"target {target} exceeds max flow {achieved}", max_flow=achieved)

        # settled vertices keep their label; the rest shift by dist_t, which
        # preserves nonnegative reduced costs on all residual arcs
        for v in range(n):
            pot[v] += dist[v] if done[v] and dist[v] < dist_t else dist_t

        bottleneck = remaining
        v = t
        while v != s:
            rid = parent[v]
            if res[rid] < bottleneck:
                bottleneck = res[rid]
            v = head[rid ^ 1]
        v = t
        while v != s:
            rid = parent[v]
            res[rid] -= bottleneck
            res[rid ^ 1] += bottleneck
            v = head[rid ^ 1]
        remaining -= bottleneck

    flow = np.zeros(net.pair_shape)
    lp_cost = 0.0
    for i, arc in enumerate(net.arcs):
        amount = res[2 * i + 1]
        if amount != 0.0:
            flow[arc.origin] = amount
            lp_cost += amount * arc_cost[i]
    return FlowSolution(flow=flow, lp_cost=lp_cost)


def lp_relaxation_bound(instance: Instance) -> float:
    """Optimal relaxation cost with divisors equal to the class capacities.

    Relaxing each use indicator to flow/capacity linearizes the fixed charge,
    so this value is a lower bound on the true optimum.
    """
    net = _assemble_network(instance, slope_scaled_costs(instance))
    return solve_min_cost_flow(net).lp_cost


def max_throughput(instance: Instance) -> float:
    """Max flow from source to sink with every edge at its largest offered
    capacity. Dinic's algorithm; deterministic."""
    n = instance.n_vertices
    s, t = instance.source, instance.sink
    caps = instance.edge_throughput()

    head: list[int] = []
    res: list[float] = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for e, (u, w) in enumerate(instance.edges):
        c = float(caps[e])
        if c <= 0.0:
            continue
        adj[u].append(len(head))
        head.append(w)
        res.append(c)
        adj[w].append(len(head))
        head.append(u)
        res.append(0.0)

    total = 0.0
    while True:
        level = [-1] * n
        level[s] = 0
        queue = [s]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            for rid in adj[u]:
                v = head[rid]
                if res[rid] > 0.0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[t] < 0:
            return total
        it = [0] * n

        # iterative blocking-flow DFS (path stack of residual arc ids)
        while True:
            path: list[int] = []
            u = s
            pushed = 0.0
            while True:
                if u == t:
                    pushed = min(res[rid] for rid in path)
                    for rid in path:
                        res[rid] -= pushed
                        res[rid ^ 1] += pushed
                    break
                advanced = False
                while it[u] < len(adj[u]):
                    rid = adj[u][it[u]]
                    v = head[rid]
                    if res[rid] > 0.0 and level[v] == level[u] + 1:
                        path.append(rid)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                level[u] = -1  # dead end in this phase
                if not path:
                    break
                rid = path.pop()
                u = head[rid ^ 1]
                it[u] += 1
            if pushed <= 0.0:
                break
            total += pushed
