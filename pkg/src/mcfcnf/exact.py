"""Exact solvers: branch-and-bound over pair-use indicators, an enumeration
brute force for small instances, and warm-started neighborhood polishing.

Branch-and-bound relaxes each undecided (edge, class) pair to a linearized
fixed charge (cost fixed/capacity + variable per unit), so every node bound
is a single min-cost-flow solve. Pairs forced open contribute their fixed
cost as a constant and only their variable cost per unit.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import TYPE_CHECKING

import numpy as np

from .evaluate import FLOW_TOL, ScoredSolution, score, verify_flow
from .flowcore import (Arc, ArcNetwork, Infeasible, max_throughput,
                       slope_scaled_costs, solve_min_cost_flow)

if TYPE_CHECKING:
    from .instance import Instance

#: Default relative optimality gap.
GAP_DEFAULT = 1e-6

#: Hard ceiling on (edges x classes) for the enumeration brute force.
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class BnBNode:
    """A search node: pairs forced open, pairs forced closed, rest free.

    branch_pair is the free pair this node will split on (chosen from its
    own relaxation flow when the node is created); None means the relaxation
    was already integral in the use indicators and the node is a leaf.
    """

    fixed_open: frozenset[int]
    fixed_closed: frozenset[int]
    lower_bound: float
    depth: int
    branch_pair: int | None = None


@dataclass(frozen=True, eq=False)
class ExactResult:
    best: ScoredSolution
    proven_optimal: bool
    bound: float
    nodes_explored: int


def _gap_abs(gap: float, incumbent: float) -> float:
    return gap * max(1.0, abs(incumbent))


def _node_network(instance: Instance, free_cost: np.ndarray,
                  fixed_open: frozenset[int], fixed_closed: frozenset[int]) -> tuple[ArcNetwork, float]:
    """Arc network for one node plus the fixed-cost constant of open pairs."""
    n_caps = instance.n_capacities
    avail = instance.available.tolist()
    caps = instance.capacities.tolist()
    free_rows = free_cost.tolist()
    var_rows = instance.variable_cost.tolist()
    fixed_rows = instance.fixed_cost.tolist()
    arcs = []
    constant = 0.0
    for e, (u, w) in enumerate(instance.edges):
        base = e * n_caps
        for k in range(n_caps):
            if not avail[e][k]:
                continue
            p = base + k
            if p in fixed_closed:
                continue
            if p in fixed_open:
                constant += fixed_rows[e][k]
                unit = var_rows[e][k]
            else:
                unit = free_rows[e][k]
            arcs.append(Arc(u, w, caps[k], unit, (e, k)))
    net = ArcNetwork(
        n_vertices=instance.n_vertices, source=instance.source, sink=instance.sink,
        target=instance.target, arcs=tuple(arcs),
        pair_shape=(instance.n_edges, n_caps),
    )
    return net, constant


def _pick_branch_pair(instance: Instance, flow: np.ndarray,
                      fixed_open: frozenset[int], fixed_closed: frozenset[int]) -> int | None:
    """Free pair with the most relaxation flow, fractional fixed charge only
    (0 < flow < capacity; saturated pairs already pay their full fixed charge
    in the relaxation). None means the relaxation is integral in the use
    indicators and the node needs no branching."""
    fractional = (flow > FLOW_TOL) & (flow < instance.capacities[None, :] - FLOW_TOL)
    flat = fractional.reshape(-1).copy()
    decided = list(fixed_open) + list(fixed_closed)
    if decided:
        flat[decided] = False
    candidates = np.flatnonzero(flat)
    if not len(candidates):
        return None
    amounts = flow.reshape(-1)[candidates]
    return int(candidates[np.argmax(amounts)])  # argmax keeps the lowest index on ties


def _branch_and_bound(instance: Instance, budget: float, gap: float,
                      extra_closed: frozenset[int],
                      warm: ScoredSolution | None,
                      node_log: list | None = None) -> ExactResult:
    start = time.perf_counter()
    free_cost = slope_scaled_costs(instance)

    incumbent = warm
    best_cost = warm.true_cost if warm is not None else math.inf

    root_net, root_const = _node_network(instance, free_cost, frozenset(), extra_closed)
    root_sol = solve_min_cost_flow(root_net)  # Infeasible propagates
    nodes = 1
    root_bound = root_const + root_sol.lp_cost
    candidate = score(instance, root_sol)
    if candidate.true_cost < best_cost:
        incumbent = candidate
        best_cost = candidate.true_cost

    # min bound among nodes cut inside the gap window; keeps the reported
    # bound honest when gap-pruning discards marginally better completions
    pruned_floor = math.inf
    counter = 0
    heap: list = []

    def consider(node: BnBNode) -> None:
        nonlocal pruned_floor, counter
        if node.lower_bound >= best_cost:
            return
        if node.lower_bound >= best_cost - _gap_abs(gap, best_cost):
            pruned_floor = min(pruned_floor, node.lower_bound)
            return
        if node.branch_pair is None:
            # relaxation integral in the indicators; its score was already
            # offered as an incumbent, nothing below this bound remains
            return
        heappush(heap, (node.lower_bound, -node.depth, counter, node))
        counter += 1

    root_pair = _pick_branch_pair(instance, root_sol.flow, frozenset(), extra_closed)
    consider(BnBNode(frozenset(), frozenset(), root_bound, 0, root_pair))

    timed_out = False
    while heap:
        if time.perf_counter() - start > budget:
            timed_out = True
            break
        bound, _, _, node = heappop(heap)
        if bound >= best_cost - _gap_abs(gap, best_cost):
            if bound < best_cost:
                pruned_floor = min(pruned_floor, bound)
            continue
        pair = node.branch_pair
        for open_it in (False, True):
            if open_it:
                child_open = node.fixed_open | {pair}
                child_closed = node.fixed_closed
            else:
                child_open = node.fixed_open
                child_closed = node.fixed_closed | {pair}
            net, const = _node_network(instance, free_cost, child_open,
                                       child_closed | extra_closed)
            try:
                sol = solve_min_cost_flow(net)
            except Infeasible:
                nodes += 1
                continue
            nodes += 1
            child_bound = const + sol.lp_cost
            if node_log is not None:
                node_log.append((node.lower_bound, child_bound))
            cand = score(instance, sol)
            if cand.true_cost < best_cost:
                incumbent = cand
                best_cost = cand.true_cost
            child_pair = _pick_branch_pair(instance, sol.flow, child_open,
                                           child_closed | extra_closed)
            consider(BnBNode(child_open, child_closed, child_bound,
                             node.depth + 1, child_pair))

    if timed_out:
        floor = min((entry[0] for entry in heap), default=math.inf)
        final_bound = min(best_cost, pruned_floor, floor)
    else:
        final_bound = min(best_cost, pruned_floor)
    proven = (best_cost - final_bound) <= _gap_abs(gap, best_cost)
    assert incumbent is not None
    return ExactResult(best=incumbent, proven_optimal=proven,
                       bound=final_bound, nodes_explored=nodes)


def solve_exact(instance: Instance, budget: float, gap: float = GAP_DEFAULT,
                node_log: list | None = None) -> ExactResult:
    """Best-first branch-and-bound for the true fixed-charge optimum.

    Raises Infeasible when the instance cannot route its target, and
    ValueError for a nonpositive budget. With node_log a list, appends
    (parent bound, child bound) per explored child.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    return _branch_and_bound(instance, budget, gap, frozenset(), None, node_log)


def brute_force(instance: Instance) -> ExactResult:
    """Exhaustive optimum over every subset of offered pairs.

    For each open subset the variable-cost-optimal flow is solved exactly,
    so the result is always proven optimal. Subsets are visited in order of
    increasing fixed cost, which lets the scan stop once fixed cost alone
    exceeds the incumbent. Guarded to edges x classes <= 20.
    """
    n_caps = instance.n_capacities
    total_pairs = instance.n_edges * n_caps
    if total_pairs > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} "
                         f"(edge, capacity) pairs, got {total_pairs}")

    pairs = [(e, k) for e in range(instance.n_edges) for k in range(n_caps)
             if instance.available[e, k]]
    n_p = len(pairs)
    caps = instance.capacities

    fixed_sums = np.zeros(1)
    s_out = np.zeros(1)
    t_in = np.zeros(1)
    for e, k in pairs:
        a = instance.fixed_cost[e, k]
        u, w = instance.edges[e]
        c_out = caps[k] if u == instance.source else 0.0
        c_in = caps[k] if w == instance.sink else 0.0
        fixed_sums = np.concatenate([fixed_sums, fixed_sums + a])
        s_out = np.concatenate([s_out, s_out + c_out])
        t_in = np.concatenate([t_in, t_in + c_in])

    feasible = (s_out >= instance.target - 1e-9) & (t_in >= instance.target - 1e-9)
    masks = np.flatnonzero(feasible)
    masks = masks[np.argsort(fixed_sums[masks], kind="stable")]

    best_cost = math.inf
    best_flow = None
    solves = 0
    caps_list = caps.tolist()
    var_rows = instance.variable_cost.tolist()
    for mask in masks.tolist():
        fixed = fixed_sums[mask]
        if fixed >= best_cost - 1e-12:
            break
        arcs = []
        for i in range(n_p):
            if mask >> i & 1:
                e, k = pairs[i]
                u, w = instance.edges[e]
                arcs.append(Arc(u, w, caps_list[k], var_rows[e][k], (e, k)))
        net = ArcNetwork(
            n_vertices=instance.n_vertices, source=instance.source,
            sink=instance.sink, target=instance.target, arcs=tuple(arcs),
            pair_shape=(instance.n_edges, n_caps),
        )
        solves += 1
        try:
            sol = solve_min_cost_flow(net)
        except Infeasible:
            continue
        total = fixed + sol.lp_cost
        if total < best_cost:
            best_cost = total
            best_flow = sol
    if best_flow is None:
        raise Infeasible(
            f"target {instance.target} exceeds max flow {max_throughput(instance)}",
            max_flow=max_throughput(instance))
    best = score(instance, best_flow)
    return ExactResult(best=best, proven_optimal=True,
                       bound=best.true_cost, nodes_explored=solves)


def polish(instance: Instance, warm: ScoredSolution, budget: float) -> ScoredSolution:
    """Exact improvement restricted to the warm solution's neighborhood.

    Pairs on edges sharing an endpoint with any edge the warm solution uses
    stay free; every other pair is forced closed. The warm solution seeds
    the incumbent, so the result is never worse than the input. On budget
    exhaustion the best found so far (at worst the warm input) is returned.
    """
    problems = verify_flow(instance, warm.flow)
    if problems:
        raise ValueError("warm start is not a valid flow: " + "; ".join(problems))
    if budget <= 0:
        return warm

    used_edges = np.nonzero(warm.used.any(axis=1))[0]
    touched = set()
    for e in used_edges:
        u, w = instance.edges[e]
        touched.add(u)
        touched.add(w)
    n_caps = instance.n_capacities
    closed = frozenset(
        e * n_caps + k
        for e, (u, w) in enumerate(instance.edges)
        if u not in touched and w not in touched
        for k in range(n_caps)
    )
    try:
        result = _branch_and_bound(instance, budget, GAP_DEFAULT, closed, warm)
    except Infeasible:  # cannot happen: warm itself routes the target
        return warm
    if result.best.true_cost < warm.true_cost:
        return result.best
    return warm
