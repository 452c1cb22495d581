"""True-cost scoring of flows and constraint verification.

A flow's true cost charges each (edge, class) pair its full fixed cost
whenever the pair carries any flow, plus the variable cost per unit carried.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .flowcore import FlowSolution

if TYPE_CHECKING:
    from .instance import Instance

#: Flow above this absolute amount counts as "using" a pair.
FLOW_TOL = 1e-9

#: Default per-constraint absolute tolerance for verify_flow.
VERIFY_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class ScoredSolution:
    """A flow plus its pair-use indicators and true (fixed + variable) cost."""

    flow: FlowSolution
    used: np.ndarray
    true_cost: float

    def __post_init__(self):
        used = np.array(self.used, dtype=np.int8)
        used.setflags(write=False)
        object.__setattr__(self, "used", used)


def _check_shape(instance: Instance, flow: FlowSolution) -> None:
    shape = (instance.n_edges, instance.n_capacities)
    if flow.flow.shape != shape:
        raise ValueError(f"flow shape {flow.flow.shape} does not match "
                         f"instance (edges, capacities) {shape}")


def score(instance: Instance, flow: FlowSolution) -> ScoredSolution:
    """Compute use indicators and the true cost of a flow.

    Pure and deterministic; does not verify flow validity (see verify_flow).
    """
    _check_shape(instance, flow)
    avail = instance.available
    g = flow.flow
    used = (g > FLOW_TOL) & avail
    fixed_part = float(instance.fixed_cost[used].sum())
    variable_part = float((instance.variable_cost[avail] * g[avail]).sum())
    return ScoredSolution(flow=flow, used=used.astype(np.int8),
                          true_cost=fixed_part + variable_part)


def verify_flow(instance: Instance, flow: FlowSolution, tol: float = VERIFY_TOL) -> list[str]:
    """Check capacity bounds, conservation at internal vertices, and the
    target amount, each within an absolute tolerance. Returns one message
    per violation, naming the offending edge/vertex and the residual."""
    _check_shape(instance, flow)
    g = flow.flow
    avail = instance.available
    violations: list[str] = []

    for e, k in zip(*np.nonzero(g < -tol)):
        violations.append(f"edge {e} capacity {k}: negative flow {float(g[e, k])!r}")
    for e, k in zip(*np.nonzero(~avail & (np.abs(g) > tol))):
        violations.append(f"edge {e} capacity {k}: flow {float(g[e, k])!r} on an unavailable class")
    over = avail & (g > instance.capacities[None, :] + tol)
    for e, k in zip(*np.nonzero(over)):
        excess = float(g[e, k] - instance.capacities[k])
        violations.append(f"edge {e} capacity {k}: flow {float(g[e, k])!r} exceeds "
                          f"capacity {float(instance.capacities[k])!r} by {excess!r}")

    per_edge = np.where(avail, g, 0.0).sum(axis=1)
    src = np.fromiter((u for u, _ in instance.edges), dtype=np.int64, count=instance.n_edges)
    dst = np.fromiter((w for _, w in instance.edges), dtype=np.int64, count=instance.n_edges)
    outflow = np.bincount(src, weights=per_edge, minlength=instance.n_vertices)
    inflow = np.bincount(dst, weights=per_edge, minlength=instance.n_vertices)
    for v in range(instance.n_vertices):
        if v in (instance.source, instance.sink):
            continue
        residual = float(inflow[v] - outflow[v])
        if abs(residual) > tol:
            violations.append(f"vertex {v}: conservation violated, residual {residual!r}")

    sent = float(outflow[instance.source])
    if abs(sent - instance.target) > tol:
        violations.append(f"source outflow {sent!r} misses target {instance.target!r} "
                          f"by {sent - instance.target!r}")
    return violations


def write_solution_csv(path, scored: ScoredSolution) -> None:
    """Write the used pairs as CSV rows plus a true-cost trailer comment."""
    g = scored.flow.flow
    lines = ["edge_index,capacity_index,flow,z"]
    for e, k in zip(*np.nonzero(g > 0.0)):
        lines.append(f"{e},{k},{float(g[e, k])!r},{int(scored.used[e, k])}")
    lines.append(f"# true_cost={scored.true_cost!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
