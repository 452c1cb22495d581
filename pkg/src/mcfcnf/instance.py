"""Problem instances: data model, text file format, validation, translation
from facility form, and random generators.

An instance is a directed graph with a designated source and sink, a shared
list of capacity classes, per-(edge, class) fixed and variable costs, and a
target flow amount. A NaN fixed cost marks a class that an edge does not
offer ("NA" in the file format).
"""
from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Malformed instance file."""


class ValidationError(ValueError):
    """Instance violates a structural invariant."""


_HEADER = "MCFCNF 1"
_FACILITY_HEADER = "MCFCNF-FACILITY 1"


def _fmt(x: float) -> str:
    # repr() is the shortest representation that round-trips a float64
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class Instance:
    """Single-source single-sink multi-capacity fixed-charge flow instance.

    Cost matrices are indexed (edge, capacity class). Instances are immutable
    after construction (arrays are read-only) and safe to share across
    threads.
    """

    n_vertices: int
    source: int
    sink: int
    edges: tuple[tuple[int, int], ...]
    capacities: np.ndarray
    fixed_cost: np.ndarray
    variable_cost: np.ndarray
    target: float

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        caps = np.array(self.capacities, dtype=np.float64).reshape(-1)
        fixed = np.array(self.fixed_cost, dtype=np.float64)
        var = np.array(self.variable_cost, dtype=np.float64)
        shape = (len(edges), caps.size)
        if fixed.shape != shape:
            raise ValueError(f"fixed_cost shape {fixed.shape} != (edges, capacities) {shape}")
        if var.shape != shape:
            raise ValueError(f"variable_cost shape {var.shape} != (edges, capacities) {shape}")
        avail = ~np.isnan(fixed)
        for arr in (caps, fixed, var, avail):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "fixed_cost", fixed)
        object.__setattr__(self, "variable_cost", var)
        object.__setattr__(self, "n_vertices", int(self.n_vertices))
        object.__setattr__(self, "source", int(self.source))
        object.__setattr__(self, "sink", int(self.sink))
        object.__setattr__(self, "target", float(self.target))
        object.__setattr__(self, "_available", avail)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_capacities(self) -> int:
        return int(self.capacities.size)

    @property
    def available(self) -> np.ndarray:
        """Boolean (edge, class) mask of offered capacity classes."""
        return self._available

    def edge_throughput(self) -> np.ndarray:
        """Largest offered capacity per edge (0 where no class is offered)."""
        caps = np.where(self.available, self.capacities[None, :], 0.0)
        return caps.max(axis=1) if self.n_capacities else np.zeros(self.n_edges)


def invariant_violations(instance: Instance) -> list[str]:
    """Structural invariant check; returns one message per violation."""
    v: list[str] = []
    n = instance.n_vertices
    if not 0 <= instance.source < n:
        v.append(f"source id {instance.source} out of range [0, {n})")
    if not 0 <= instance.sink < n:
        v.append(f"sink id {instance.sink} out of range [0, {n})")
    if instance.source == instance.sink:
        v.append("source and sink must differ")
    for e, (u, w) in enumerate(instance.edges):
        if not 0 <= u < n or not 0 <= w < n:
            v.append(f"edge {e}: endpoint ({u}, {w}) out of range [0, {n})")
        elif u == w:
            v.append(f"edge {e}: self-loops are not allowed")
    caps = instance.capacities
    for k, c in enumerate(caps):
        if not c > 0:
            v.append(f"capacity {k} must be positive (got {c})")
    if np.any(np.diff(caps) <= 0):
        v.append("capacities must be strictly increasing")
    if not instance.target > 0:
        v.append("target must be positive")
    avail = instance.available
    bad_fixed = avail & (instance.fixed_cost < 0)
    for e, k in zip(*np.nonzero(bad_fixed)):
        v.append(f"edge {e} capacity {k}: fixed cost must be nonnegative")
    bad_var = avail & ~(instance.variable_cost >= 0)
    for e, k in zip(*np.nonzero(bad_var)):
        v.append(f"edge {e} capacity {k}: variable cost must be nonnegative")
    return v


def validate(instance: Instance) -> list[str]:
    """Full validation: structural invariants plus routability of the target.

    The routability check runs a max-flow with every edge at its largest
    offered capacity; it is skipped when structural violations exist.
    """
    v = invariant_violations(instance)
    if v:
        return v
    from .flowcore import max_throughput

    mf = max_throughput(instance)
    if mf + 1e-9 < instance.target:
        v.append(f"target exceeds max flow (target={_fmt(instance.target)}, max flow={_fmt(mf)})")
    return v


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _significant_lines(text: str) -> list[tuple[int, list[str]]]:
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            out.append((ln, body.split()))
    return out


def _parse_float(token: str, ln: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {ln}: expected a number for {what}, got {token!r}") from None


def _parse_int(token: str, ln: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"line {ln}: expected an integer for {what}, got {token!r}") from None


def _parse_cost_pairs(tokens: list[str], n_caps: int, ln: int) -> tuple[list[float], list[float]]:
    a_row, b_row = [], []
    for k in range(n_caps):
        a_tok, b_tok = tokens[2 * k], tokens[2 * k + 1]
        if a_tok.upper() == "NA":
            if b_tok.upper() != "NA":
                raise ParseError(f"line {ln}: capacity {k} marked NA must have NA variable cost")
            a_row.append(math.nan)
            b_row.append(math.nan)
        else:
            a_row.append(_parse_float(a_tok, ln, f"fixed cost {k}"))
            b_row.append(_parse_float(b_tok, ln, f"variable cost {k}"))
    return a_row, b_row


def parse_instance(text: str) -> Instance:
    """Parse the canonical instance text format. Raises ParseError on
    malformed input; the result is not invariant-checked (see load_instance).
    """
    lines = _significant_lines(text)
    if not lines or " ".join(lines[0][1]) != _HEADER:
        raise ParseError(f"missing header line {_HEADER!r}")
    i = 1

    def expect(keyword: str, n_fields: int) -> tuple[int, list[str]]:
        nonlocal i
        if i >= len(lines):
            raise ParseError(f"unexpected end of file, expected {keyword} section")
        ln, toks = lines[i]
        if toks[0] != keyword or len(toks) < n_fields:
            raise ParseError(f"line {ln}: expected '{keyword}' with {n_fields - 1} fields")
        i += 1
        return ln, toks

    ln, toks = expect("VERTICES", 6)
    if toks[2] != "SOURCE" or toks[4] != "SINK":
        raise ParseError(f"line {ln}: expected 'VERTICES <n> SOURCE <s> SINK <t>'")
    n = _parse_int(toks[1], ln, "vertex count")
    source = _parse_int(toks[3], ln, "source id")
    sink = _parse_int(toks[5], ln, "sink id")

    ln, toks = expect("TARGET", 2)
    target = _parse_float(toks[1], ln, "target")

    ln, toks = expect("CAPACITIES", 2)
    n_caps = _parse_int(toks[1], ln, "capacity count")
    if len(toks) != 2 + n_caps:
        raise ParseError(f"line {ln}: expected {n_caps} capacity values")
    caps = [_parse_float(t, ln, "capacity") for t in toks[2:]]

    ln, toks = expect("EDGES", 2)
    m = _parse_int(toks[1], ln, "edge count")

    edges, a_rows, b_rows = [], [], []
    for _ in range(m):
        if i >= len(lines):
            raise ParseError(f"unexpected end of file, expected {m} edge lines")
        ln, toks = lines[i]
        i += 1
        if len(toks) != 2 + 2 * n_caps:
            raise ParseError(f"line {ln}: edge line needs 2 endpoints and {n_caps} cost pairs")
        edges.append((_parse_int(toks[0], ln, "edge src"), _parse_int(toks[1], ln, "edge dest")))
        a_row, b_row = _parse_cost_pairs(toks[2:], n_caps, ln)
        a_rows.append(a_row)
        b_rows.append(b_row)
    if i < len(lines):
        raise ParseError(f"line {lines[i][0]}: trailing content after {m} edges")

    return Instance(
        n_vertices=n, source=source, sink=sink, edges=tuple(edges),
        capacities=np.array(caps), fixed_cost=np.array(a_rows).reshape(m, n_caps),
        variable_cost=np.array(b_rows).reshape(m, n_caps), target=target,
    )


def format_instance(instance: Instance) -> str:
    """Render the canonical text form (stable byte-for-byte)."""
    out = [
        _HEADER,
        f"VERTICES {instance.n_vertices} SOURCE {instance.source} SINK {instance.sink}",
        f"TARGET {_fmt(instance.target)}",
        "CAPACITIES " + " ".join([str(instance.n_capacities)] + [_fmt(c) for c in instance.capacities]),
        f"EDGES {instance.n_edges}",
    ]
    for e, (u, w) in enumerate(instance.edges):
        fields = [str(u), str(w)]
        for k in range(instance.n_capacities):
            if instance.available[e, k]:
                fields.append(_fmt(instance.fixed_cost[e, k]))
                fields.append(_fmt(instance.variable_cost[e, k]))
            else:
                fields.extend(["NA", "NA"])
        out.append(" ".join(fields))
    return "\n".join(out) + "\n"


def load_instance(path) -> Instance:
    """Load and invariant-check an instance file.

    Raises ParseError for malformed files and ValidationError when a
    structural invariant fails. Target routability is not checked here;
    use validate() for the full check.
    """
    text = Path(path).read_text(encoding="utf-8")
    instance = parse_instance(text)
    violations = invariant_violations(instance)
    if violations:
        raise ValidationError("; ".join(violations))
    return instance


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(format_instance(instance), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# facility form (multi-source / multi-sink with terminal costs)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Terminal:
    """A capture source or storage sink attached to a transport vertex."""

    vertex: int
    open_cost: float
    unit_cost: float
    limit: float  # max rate for sources, max capacity for sinks


@dataclass(frozen=True, eq=False)
class FacilityInstance:
    """Facility-style input: a transport graph plus costed sources and sinks."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    capacities: np.ndarray
    fixed_cost: np.ndarray
    variable_cost: np.ndarray
    sources: tuple[Terminal, ...]
    sinks: tuple[Terminal, ...]
    target: float


def from_facility_form(facility: FacilityInstance) -> Instance:
    """Translate a facility instance into single-source/single-sink form.

    A fresh super-source and super-sink are appended as vertices n and n+1.
    Each source j contributes an edge super-source -> j offered at a single
    capacity class equal to j's limit, with the open cost as fixed cost and
    the unit cost as variable cost; sinks contribute the mirror edge into the
    super-sink. Transport edges keep their full cost table. The capacity list
    becomes the sorted union of transport capacities and terminal limits.

    Raises ValueError when a terminal names a vertex outside the transport
    graph. The result is not feasibility-checked: a facility instance whose
    terminals cannot carry the target translates into an instance that
    validate() flags.
    """
    n = facility.n_vertices
    for role, terms in (("source", facility.sources), ("sink", facility.sinks)):
        for t in terms:
            if not 0 <= t.vertex < n:
                raise ValueError(f"{role} vertex {t.vertex} not in transport graph (n={n})")
            if not t.limit > 0:
                raise ValueError(f"{role} at vertex {t.vertex}: limit must be positive")

    old_caps = [float(c) for c in facility.capacities]
    limits = [float(t.limit) for t in facility.sources + facility.sinks]
    new_caps = sorted(set(old_caps) | set(limits))
    col = {c: k for k, c in enumerate(new_caps)}
    n_caps = len(new_caps)

    m_total = len(facility.edges) + len(facility.sources) + len(facility.sinks)
    fixed = np.full((m_total, n_caps), math.nan)
    var = np.full((m_total, n_caps), math.nan)
    edges: list[tuple[int, int]] = []

    for e, (u, w) in enumerate(facility.edges):
        edges.append((u, w))
        for k, c in enumerate(old_caps):
            fixed[e, col[c]] = facility.fixed_cost[e, k]
            var[e, col[c]] = facility.variable_cost[e, k]

    super_source, super_sink = n, n + 1
    for t in facility.sources:
        e = len(edges)
        edges.append((super_source, t.vertex))
        fixed[e, col[float(t.limit)]] = t.open_cost
        var[e, col[float(t.limit)]] = t.unit_cost
    for t in facility.sinks:
        e = len(edges)
        edges.append((t.vertex, super_sink))
        fixed[e, col[float(t.limit)]] = t.open_cost
        var[e, col[float(t.limit)]] = t.unit_cost

    return Instance(
        n_vertices=n + 2, source=super_source, sink=super_sink, edges=tuple(edges),
        capacities=np.array(new_caps), fixed_cost=fixed, variable_cost=var,
        target=facility.target,
    )


def parse_facility_instance(text: str) -> FacilityInstance:
    lines = _significant_lines(text)
    if not lines or " ".join(lines[0][1]) != _FACILITY_HEADER:
        raise ParseError(f"missing header line {_FACILITY_HEADER!r}")
    i = 1

    def next_line(keyword: str) -> tuple[int, list[str]]:
        nonlocal i
        if i >= len(lines):
            raise ParseError(f"unexpected end of file, expected {keyword}")
        ln, toks = lines[i]
        i += 1
        if keyword and toks[0] != keyword:
            raise ParseError(f"line {ln}: expected '{keyword}' section")
        return ln, toks

    ln, toks = next_line("VERTICES")
    n = _parse_int(toks[1], ln, "vertex count")
    ln, toks = next_line("TARGET")
    target = _parse_float(toks[1], ln, "target")
    ln, toks = next_line("CAPACITIES")
    n_caps = _parse_int(toks[1], ln, "capacity count")
    if len(toks) != 2 + n_caps:
        raise ParseError(f"line {ln}: expected {n_caps} capacity values")
    caps = [_parse_float(t, ln, "capacity") for t in toks[2:]]

    def read_terminals(keyword: str) -> list[Terminal]:
        nonlocal i
        ln, toks = next_line(keyword)
        count = _parse_int(toks[1], ln, f"{keyword.lower()} count")
        terms = []
        for _ in range(count):
            ln, toks = next_line("")
            if len(toks) != 4:
                raise ParseError(f"line {ln}: terminal line needs 4 fields")
            terms.append(Terminal(
                vertex=_parse_int(toks[0], ln, "terminal vertex"),
                open_cost=_parse_float(toks[1], ln, "open cost"),
                unit_cost=_parse_float(toks[2], ln, "unit cost"),
                limit=_parse_float(toks[3], ln, "limit"),
            ))
        return terms

    sources = read_terminals("SOURCES")
    sinks = read_terminals("SINKS")

    ln, toks = next_line("EDGES")
    m = _parse_int(toks[1], ln, "edge count")
    edges, a_rows, b_rows = [], [], []
    for _ in range(m):
        ln, toks = next_line("")
        if len(toks) != 2 + 2 * n_caps:
            raise ParseError(f"line {ln}: edge line needs 2 endpoints and {n_caps} cost pairs")
        edges.append((_parse_int(toks[0], ln, "edge src"), _parse_int(toks[1], ln, "edge dest")))
        a_row, b_row = _parse_cost_pairs(toks[2:], n_caps, ln)
        a_rows.append(a_row)
        b_rows.append(b_row)

    return FacilityInstance(
        n_vertices=n, edges=tuple(edges), capacities=np.array(caps),
        fixed_cost=np.array(a_rows).reshape(m, n_caps),
        variable_cost=np.array(b_rows).reshape(m, n_caps),
        sources=tuple(sources), sinks=tuple(sinks), target=target,
    )


def load_facility_instance(path) -> FacilityInstance:
    return parse_facility_instance(Path(path).read_text(encoding="utf-8"))


def format_facility_instance(facility: FacilityInstance) -> str:
    out = [
        _FACILITY_HEADER,
        f"VERTICES {facility.n_vertices}",
        f"TARGET {_fmt(facility.target)}",
        "CAPACITIES " + " ".join([str(len(facility.capacities))] + [_fmt(c) for c in facility.capacities]),
        f"SOURCES {len(facility.sources)}",
    ]
    for t in facility.sources:
        out.append(f"{t.vertex} {_fmt(t.open_cost)} {_fmt(t.unit_cost)} {_fmt(t.limit)}")
    out.append(f"SINKS {len(facility.sinks)}")
    for t in facility.sinks:
        out.append(f"{t.vertex} {_fmt(t.open_cost)} {_fmt(t.unit_cost)} {_fmt(t.limit)}")
    out.append(f"EDGES {len(facility.edges)}")
    n_caps = len(facility.capacities)
    for e, (u, w) in enumerate(facility.edges):
        fields = [str(u), str(w)]
        for k in range(n_caps):
            a = facility.fixed_cost[e, k]
            if math.isnan(a):
                fields.extend(["NA", "NA"])
            else:
                fields.extend([_fmt(a), _fmt(facility.variable_cost[e, k])])
        out.append(" ".join(fields))
    return "\n".join(out) + "\n"


def save_facility_instance(facility: FacilityInstance, path) -> None:
    Path(path).write_text(format_facility_instance(facility), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# random generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostParams:
    """Ranges driving random cost generation.

    Fixed costs grow sublinearly with capacity (exponent < 1), so the
    fixed-cost-per-capacity-unit ratio strictly decreases across classes:
    bigger pipes are cheaper per unit, mirroring bulk discounts.
    """

    fixed_range: tuple[float, float] = (4.0, 40.0)
    variable_range: tuple[float, float] = (0.5, 4.0)
    first_capacity: tuple[int, int] = (2, 6)
    capacity_growth: tuple[float, float] = (1.6, 2.4)
    economy_exponent: tuple[float, float] = (0.55, 0.85)


_GEOMETRIC_RADIUS_FACTOR = 1.25
_MAX_GENERATOR_ATTEMPTS = 64


def _draw_capacities(rng: random.Random, n_capacities: int, params: CostParams) -> list[float]:
    caps = [float(rng.randint(*params.first_capacity))]
    for _ in range(n_capacities - 1):
        grown = math.ceil(caps[-1] * rng.uniform(*params.capacity_growth))
        caps.append(float(max(grown, caps[-1] + 1)))
    return caps


def _draw_costs(rng: random.Random, n_edges: int, caps: list[float],
                params: CostParams) -> tuple[np.ndarray, np.ndarray]:
    n_caps = len(caps)
    fixed = np.empty((n_edges, n_caps))
    var = np.empty((n_edges, n_caps))
    for e in range(n_edges):
        a1 = rng.uniform(*params.fixed_range)
        gamma = rng.uniform(*params.economy_exponent)
        b = rng.uniform(*params.variable_range)
        for k in range(n_caps):
            fixed[e, k] = a1 * (caps[k] / caps[0]) ** gamma
            if k > 0:
                b = b * rng.uniform(0.75, 0.98)
            var[e, k] = b
    return fixed, var


def _grid_topology(n_vertices: int) -> tuple[int, int, int, list[tuple[int, int]]]:
    """Directed lattice of n_vertices cells plus an attached source and sink.

    Horizontal edges point rightward; vertical edges go both ways. The source
    feeds every left-column cell and every right-column cell feeds the sink.
    """
    rows = 1
    for d in range(int(math.isqrt(n_vertices)), 0, -1):
        if n_vertices % d == 0:
            rows = d
            break
    cols = n_vertices // rows
    source, sink = n_vertices, n_vertices + 1
    vid = lambda r, c: r * cols + c
    edges = [(source, vid(r, 0)) for r in range(rows)]
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
                edges.append((vid(r + 1, c), vid(r, c)))
    edges.extend((vid(r, cols - 1), sink) for r in range(rows))
    return n_vertices + 2, source, sink, edges


def _geometric_topology(rng: random.Random, n_vertices: int) -> tuple[int, int, int, list[tuple[int, int]]]:
    """Random points in the unit square, near neighbors connected both ways.

    The leftmost point is the source, the rightmost the sink; edges into the
    source and out of the sink are dropped so the terminals stay pure.
    """
    pts = [(rng.random(), rng.random()) for _ in range(n_vertices)]
    source = min(range(n_vertices), key=lambda i: (pts[i][0], i))
    sink = max(range(n_vertices), key=lambda i: (pts[i][0], -i))
    radius2 = (_GEOMETRIC_RADIUS_FACTOR ** 2) * math.log(max(n_vertices, 2)) / (math.pi * n_vertices)
    edges = []
    for i in range(n_vertices):
        for j in range(i + 1, n_vertices):
            dx = pts[i][0] - pts[j][0]
            dy = pts[i][1] - pts[j][1]
            if dx * dx + dy * dy <= radius2:
                for u, w in ((i, j), (j, i)):
                    if w != source and u != sink:
                        edges.append((u, w))
    return n_vertices, source, sink, edges


def generate_random(kind: str, n_vertices: int, n_capacities: int,
                    cost_params: CostParams | None = None,
                    target_fraction: float = 0.5, seed: int = 0) -> Instance:
    """Generate a random feasible instance, bit-reproducible per seed.

    kind is "grid" or "geometric". For grids, n_vertices counts the lattice
    cells; the attached source and sink add two more. Capacities and the
    target are integers so integral-flow reasoning applies; the target is
    target_fraction of the instance's max flow (at least 1).
    """
    if kind not in ("grid", "geometric"):
        raise ValueError(f"unknown kind {kind!r}, expected 'grid' or 'geometric'")
    if n_vertices < 2:
        raise ValueError("need at least 2 vertices")
    if n_capacities < 1:
        raise ValueError("need at least 1 capacity class")
    if not 0 < target_fraction <= 1:
        raise ValueError("target_fraction must be in (0, 1]")
    params = cost_params or CostParams()
    rng = random.Random(seed)

    from .flowcore import max_throughput

    for _ in range(_MAX_GENERATOR_ATTEMPTS):
        if kind == "grid":
            n, source, sink, edges = _grid_topology(n_vertices)
        else:
            n, source, sink, edges = _geometric_topology(rng, n_vertices)
        if source == sink or not edges:
            continue
        caps = _draw_capacities(rng, n_capacities, params)
        fixed, var = _draw_costs(rng, len(edges), caps, params)
        instance = Instance(
            n_vertices=n, source=source, sink=sink, edges=tuple(edges),
            capacities=np.array(caps), fixed_cost=fixed, variable_cost=var,
            target=1.0,
        )
        mf = max_throughput(instance)
        if mf < 1.0:
            continue
        target = float(max(1, math.floor(target_fraction * mf)))
        return dataclasses.replace(instance, target=target)
    raise RuntimeError(f"could not generate a routable {kind} instance after "
                       f"{_MAX_GENERATOR_ATTEMPTS} attempts (seed={seed})")
