"""Problem instances: parsing, merging and the immutable instance container.

An instance couples three ingredients:

* a weighted undirected core graph over nodes ``1..num_nodes``,
* a set of candidate facilities (a subset of the core nodes) with opening
  costs, one of which is the designated root,
* a set of customers, living in their own id space (strings), with a complete
  facility x customer assignment cost matrix.

Supported input formats:

* ``parse_stp``  - OR-Library Steiner tree files (graph only),
* ``parse_uflp`` - OR-Library / UflLib facility location files (costs only),
* ``parse_tiny`` - a small self-describing text format used for fixtures,
* ``merge_instances`` - combine an STP graph with UFLP cost data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np


class ParseError(ValueError):
    """Raised for malformed input files; message includes a line number."""


class MergeError(ValueError):
    """Raised when an STP graph and UFLP cost data cannot be combined."""


def _canon_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem instance.

    ``assignment_costs`` is a dense float64 matrix with one row per facility
    (in ``facilities`` order) and one column per customer (in ``customers``
    order).  Arrays are frozen after construction.
    """

    name: str
    num_nodes: int
    core_edges: tuple[tuple[int, int, float], ...]  # (u, v, cost), u < v
    facilities: tuple[int, ...]
    root: int
    customers: tuple[str, ...]
    opening_costs: dict[int, float]  # facility id -> cost
    assignment_costs: np.ndarray  # shape (len(facilities), len(customers))
    hop_limit: int

    # derived, filled in __post_init__
    facility_index: dict[int, int] = field(repr=False, default_factory=dict)
    customer_index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise ValueError("instance needs at least one core node")
        if self.hop_limit < 1:
            raise ValueError(f"hop limit must be >= 1, got {self.hop_limit}")
        nodes = self.core_nodes
        if len(set(self.facilities)) != len(self.facilities):
            raise ValueError("duplicate facility ids")
        for f in self.facilities:
            if f not in nodes:
                raise ValueError(f"facility {f} is not a core node")
        if self.root not in self.facilities:
            raise ValueError(f"root {self.root} is not a facility")
        if len(set(self.customers)) != len(self.customers):
            raise ValueError("duplicate customer ids")
        seen: set[tuple[int, int]] = set()
        for u, v, cost in self.core_edges:
            if not (1 <= u <= self.num_nodes and 1 <= v <= self.num_nodes):
                raise ValueError(f"edge ({u},{v}) references unknown node")
            if u == v:
                raise ValueError(f"self loop on node {u}")
            if (u, v) != _canon_edge(u, v):
                raise ValueError(f"edge ({u},{v}) not in canonical order")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            if not (cost >= 0 and math.isfinite(cost)):
                raise ValueError(f"edge ({u},{v}) has invalid cost {cost}")
        if set(self.opening_costs) != set(self.facilities):
            raise ValueError("opening costs must cover exactly the facilities")
        for f, cost in self.opening_costs.items():
            if not (cost >= 0 and math.isfinite(cost)):
                raise ValueError(f"facility {f} has invalid opening cost {cost}")
        mat = np.asarray(self.assignment_costs, dtype=np.float64)
        if mat.shape != (len(self.facilities), len(self.customers)):
            raise ValueError(
                f"assignment matrix shape {mat.shape} does not match "
                f"{len(self.facilities)} facilities x {len(self.customers)} customers"
            )
        if mat.size and (not np.isfinite(mat).all() or (mat < 0).any()):
            raise ValueError("assignment costs must be finite and >= 0")
        mat.setflags(write=False)
        object.__setattr__(self, "assignment_costs", mat)
        object.__setattr__(
            self, "facility_index", {f: i for i, f in enumerate(self.facilities)}
        )
        object.__setattr__(
            self, "customer_index", {c: i for i, c in enumerate(self.customers)}
        )
        self._check_connected()
        self._build_adjacency()

    # -- derived structure -------------------------------------------------

    @property
    def core_nodes(self) -> frozenset[int]:
        return frozenset(range(1, self.num_nodes + 1))

    def _check_connected(self) -> None:
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.num_nodes + 1)}
        for u, v, _ in self.core_edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {1}
        stack = [1]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if len(seen) != self.num_nodes:
            missing = min(set(range(1, self.num_nodes + 1)) - seen)
            raise ValueError(f"core graph is disconnected (node {missing} unreachable)")

    def _build_adjacency(self) -> None:
        adj: dict[int, list[tuple[int, float]]] = {
            v: [] for v in range(1, self.num_nodes + 1)
        }
        cost_map: dict[tuple[int, int], float] = {}
        for u, v, cost in self.core_edges:
            adj[u].append((v, cost))
            adj[v].append((u, cost))
            cost_map[(u, v)] = cost
        for v in adj:
            adj[v].sort()
        m = len(self.core_edges)
        src = np.empty(2 * m, dtype=np.int32)
        dst = np.empty(2 * m, dtype=np.int32)
        wgt = np.empty(2 * m, dtype=np.float64)
        for i, (u, v, cost) in enumerate(self.core_edges):
            src[i], dst[i], wgt[i] = u, v, cost
            src[m + i], dst[m + i], wgt[m + i] = v, u, cost
        for arr in (src, dst, wgt):
            arr.setflags(write=False)
        object.__setattr__(self, "_adjacency", adj)
        object.__setattr__(self, "_edge_cost", cost_map)
        object.__setattr__(self, "_arc_src", src)
        object.__setattr__(self, "_arc_dst", dst)
        object.__setattr__(self, "_arc_cost", wgt)

    def neighbors(self, node: int) -> list[tuple[int, float]]:
        """Neighbors of ``node`` as (other endpoint, edge cost), id-sorted."""
        return self._adjacency[node]  # type: ignore[attr-defined]

    def edge_cost(self, u: int, v: int) -> float:
        """Cost of core edge {u, v}; KeyError if the edge does not exist."""
        return self._edge_cost[_canon_edge(u, v)]  # type: ignore[attr-defined]

    def has_edge(self, u: int, v: int) -> bool:
        return _canon_edge(u, v) in self._edge_cost  # type: ignore[attr-defined]

    def assignment_cost(self, facility: int, customer: str) -> float:
        return float(
            self.assignment_costs[
                self.facility_index[facility], self.customer_index[customer]
            ]
        )

    def opening_cost_array(self) -> np.ndarray:
        """Opening costs in ``facilities`` order."""
        return np.array([self.opening_costs[f] for f in self.facilities])

    def path_cost(self, path: Iterable[int]) -> float:
        """Total edge cost along a node path."""
        nodes = list(path)
        return sum(self.edge_cost(a, b) for a, b in zip(nodes, nodes[1:]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.num_nodes == other.num_nodes
            and self.core_edges == other.core_edges
            and self.facilities == other.facilities
            and self.root == other.root
            and self.customers == other.customers
            and self.opening_costs == other.opening_costs
            and np.array_equal(self.assignment_costs, other.assignment_costs)
            and self.hop_limit == other.hop_limit
        )

    __hash__ = None  # type: ignore[assignment]


# -- token stream helper ----------------------------------------------------


class _Tokens:
    """Whitespace token stream that remembers line numbers for errors."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0
        self.last_line = 0

    def exhausted(self) -> bool:
        return self.pos >= len(self.items)

    def next(self, what: str) -> str:
        if self.exhausted():
            raise ParseError(f"unexpected end of file while reading {what}")
        tok, line = self.items[self.pos]
        self.pos += 1
        self.last_line = line
        return tok

    def next_int(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(
                f"line {self.last_line}: expected integer {what}, got {tok!r}"
            ) from None

    def next_float(self, what: str) -> float:
        tok = self.next(what)
        try:
            val = float(tok)
        except ValueError:
            raise ParseError(
                f"line {self.last_line}: expected number {what}, got {tok!r}"
            ) from None
        if not math.isfinite(val):
            raise ParseError(f"line {self.last_line}: non-finite {what}")
        return val


# -- OR-Library Steiner tree files ------------------------------------------


@dataclass(frozen=True)
class StpGraph:
    """Raw parse of an OR-Library Steiner tree file (terminals dropped)."""

    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]


def parse_stp(text: str) -> StpGraph:
    """Parse an OR-Library Steiner tree file.

    Layout: first the node and edge counts, then one ``u v cost`` line per
    edge, then the terminal count and terminal ids.  The terminal section is
    optional here and its content is ignored; the graph is what matters.
    """
    toks = _Tokens(text)
    num_nodes = toks.next_int("node count")
    num_edges = toks.next_int("edge count")
    if num_nodes < 1:
        raise ParseError(f"line {toks.last_line}: node count must be >= 1")
    edges: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()
    for _ in range(num_edges):
        u = toks.next_int("edge endpoint")
        v = toks.next_int("edge endpoint")
        cost = toks.next_float("edge cost")
        line = toks.last_line
        if not (1 <= u <= num_nodes and 1 <= v <= num_nodes):
            raise ParseError(f"line {line}: edge ({u},{v}) out of node range")
        if u == v:
            raise ParseError(f"line {line}: self loop on node {u}")
        if cost < 0:
            raise ParseError(f"line {line}: negative edge cost {cost}")
        key = _canon_edge(u, v)
        if key in seen:
            raise ParseError(f"line {line}: duplicate edge ({u},{v})")
        seen.add(key)
        edges.append((key[0], key[1], float(cost)))
    if not toks.exhausted():
        num_terminals = toks.next_int("terminal count")
        for _ in range(num_terminals):
            t = toks.next_int("terminal id")
            if not (1 <= t <= num_nodes):
                raise ParseError(f"line {toks.last_line}: terminal {t} out of range")
        if not toks.exhausted():
            tok, line = toks.items[toks.pos]
            raise ParseError(f"line {line}: trailing token {tok!r}")
    return StpGraph(num_nodes=num_nodes, edges=tuple(sorted(edges)))


# -- OR-Library / UflLib facility location files -----------------------------


@dataclass(frozen=True)
class UflpData:
    """Opening costs plus the dense facility x customer cost matrix."""

    opening: tuple[float, ...]
    costs: np.ndarray  # shape (num_facilities, num_customers)

    @property
    def num_facilities(self) -> int:
        return len(self.opening)

    @property
    def num_customers(self) -> int:
        return int(self.costs.shape[1])


def parse_uflp(text: str) -> UflpData:
    """Parse an uncapacitated facility location file.

    Two layouts are auto-detected from the header shape:

    * classic OR-Library: ``m n`` header, m ``capacity opening`` lines, then
      per customer a demand value followed by m assignment costs.  Capacities
      and demands are parsed and discarded.
    * UflLib: optional ``FILE: name`` line, ``m n 0`` header, then per
      facility a row ``index opening cost_1 .. cost_n``.
    """
    lines = text.splitlines()
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start < len(lines) and lines[start].lstrip().startswith("FILE:"):
        start += 1
    toks = _Tokens("\n".join(lines[start:]))
    # shift reported line numbers so they refer to the original file
    toks.items = [(tok, line + start) for tok, line in toks.items]

    header_line = toks.items[0][1] if toks.items else 1
    m = toks.next_int("facility count")
    n = toks.next_int("customer count")
    if m < 1 or n < 0:
        raise ParseError(f"line {header_line}: bad facility/customer counts")
    third_is_zero = (
        not toks.exhausted()
        and toks.items[toks.pos][0] == "0"
        and toks.items[toks.pos][1] == header_line
    )

    opening = np.empty(m, dtype=np.float64)
    costs = np.empty((m, n), dtype=np.float64)
    if third_is_zero:
        toks.next("header padding")
        for i in range(m):
            idx = toks.next_int("facility index")
            if idx != i + 1:
                raise ParseError(
                    f"line {toks.last_line}: expected facility {i + 1}, got {idx}"
                )
            opening[i] = toks.next_float("opening cost")
            for k in range(n):
                costs[i, k] = toks.next_float("assignment cost")
    else:
        for i in range(m):
            toks.next_float("capacity")  # discarded
            opening[i] = toks.next_float("opening cost")
        for k in range(n):
            toks.next_float("demand")  # discarded
            for i in range(m):
                costs[i, k] = toks.next_float("assignment cost")
    if not toks.exhausted():
        tok, line = toks.items[toks.pos]
        raise ParseError(f"line {line}: trailing token {tok!r}")
    if (opening < 0).any() or (costs < 0).any():
        raise ParseError("negative cost in facility location file")
    return UflpData(opening=tuple(float(x) for x in opening), costs=costs)


# -- merging ------------------------------------------------------------------


def merge_instances(
    stp: StpGraph, uflp: UflpData, hop_limit: int, name: str = "merged"
) -> Instance:
    """Combine an STP core graph with UFLP cost data into one instance.

    The first ``m`` node ids (ascending) become the facilities, the
    smallest-id facility becomes the root, and customers get fresh ids
    ``c1..cn`` so the two id spaces stay disjoint.
    """
    m = uflp.num_facilities
    if m > stp.num_nodes:
        raise MergeError(
            f"{m} facilities but the core graph has only {stp.num_nodes} nodes"
        )
    if hop_limit < 1:
        raise MergeError(f"hop limit must be >= 1, got {hop_limit}")
    facilities = tuple(range(1, m + 1))
    customers = tuple(f"c{k}" for k in range(1, uflp.num_customers + 1))
    return Instance(
        name=name,
        num_nodes=stp.num_nodes,
        core_edges=stp.edges,
        facilities=facilities,
        root=facilities[0],
        customers=customers,
        opening_costs={f: uflp.opening[i] for i, f in enumerate(facilities)},
        assignment_costs=np.array(uflp.costs, dtype=np.float64),
        hop_limit=hop_limit,
    )


# -- tiny fixture format ------------------------------------------------------


def _fmt_cost(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def parse_tiny(text: str, name: str = "tiny") -> Instance:
    """Parse the tiny fixture format.

    Header line: ``num_nodes num_facilities num_customers hop_limit root``.
    Then ``e u v cost`` per core edge, ``f id cost`` per facility and
    ``a facility customer cost`` per assignment pair.  The assignment section
    must be complete (every facility x customer pair exactly once).
    """
    header: list[int] | None = None
    edges: list[tuple[int, int, float]] = []
    openings: dict[int, float] = {}
    assign: dict[tuple[int, str], float] = {}
    f_lines: list[int] = []

    def fail(lineno: int, msg: str) -> ParseError:
        return ParseError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 5:
                raise fail(lineno, "header needs 5 fields")
            try:
                header = [int(p) for p in parts]
            except ValueError:
                raise fail(lineno, "header fields must be integers") from None
            continue
        kind = parts[0]
        if kind == "e":
            if len(parts) != 4:
                raise fail(lineno, "edge line needs 'e u v cost'")
            try:
                u, v = int(parts[1]), int(parts[2])
                cost = float(parts[3])
            except ValueError:
                raise fail(lineno, "bad edge line") from None
            key = _canon_edge(u, v)
            if any(_canon_edge(a, b) == key for a, b, _ in edges):
                raise fail(lineno, f"duplicate edge ({u},{v})")
            edges.append((key[0], key[1], cost))
        elif kind == "f":
            if len(parts) != 3:
                raise fail(lineno, "facility line needs 'f id cost'")
            try:
                fid, cost = int(parts[1]), float(parts[2])
            except ValueError:
                raise fail(lineno, "bad facility line") from None
            if fid in openings:
                raise fail(lineno, f"duplicate facility {fid}")
            openings[fid] = cost
            f_lines.append(fid)
        elif kind == "a":
            if len(parts) != 4:
                raise fail(lineno, "assignment line needs 'a facility customer cost'")
            try:
                fid = int(parts[1])
                cost = float(parts[3])
            except ValueError:
                raise fail(lineno, "bad assignment line") from None
            cust = parts[2]
            if (fid, cust) in assign:
                raise fail(lineno, f"duplicate assignment ({fid},{cust})")
            assign[(fid, cust)] = cost
        else:
            raise fail(lineno, f"unknown record type {kind!r}")

    if header is None:
        raise ParseError("line 1: empty file")
    num_nodes, num_fac, num_cust, hop_limit, root = header
    facilities = tuple(sorted(openings))
    if len(facilities) != num_fac:
        raise ParseError(
            f"header declares {num_fac} facilities, file has {len(facilities)}"
        )
    customers = tuple(sorted({cust for _, cust in assign}))
    if len(customers) != num_cust:
        raise ParseError(
            f"header declares {num_cust} customers, file has {len(customers)}"
        )
    missing = [
        (f, c) for f in facilities for c in customers if (f, c) not in assign
    ]
    if missing:
        raise ParseError(f"missing assignment cost for {missing[0]}")
    if len(assign) != num_fac * num_cust:
        extra = sorted(set(assign) - {(f, c) for f in facilities for c in customers})
        raise ParseError(f"assignment for unknown pair {extra[0]}")
    matrix = np.array(
        [[assign[(f, c)] for c in customers] for f in facilities], dtype=np.float64
    )
    if matrix.size == 0:
        matrix = matrix.reshape(num_fac, num_cust)
    try:
        return Instance(
            name=name,
            num_nodes=num_nodes,
            core_edges=tuple(sorted(edges)),
            facilities=facilities,
            root=root,
            customers=customers,
            opening_costs=openings,
            assignment_costs=matrix,
            hop_limit=hop_limit,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_tiny(instance: Instance) -> str:
    """Canonical tiny-format text; inverse of :func:`parse_tiny`."""
    out: list[str] = [
        f"{instance.num_nodes} {len(instance.facilities)} "
        f"{len(instance.customers)} {instance.hop_limit} {instance.root}"
    ]
    for u, v, cost in sorted(instance.core_edges):
        out.append(f"e {u} {v} {_fmt_cost(cost)}")
    for f in instance.facilities:
        out.append(f"f {f} {_fmt_cost(instance.opening_costs[f])}")
    for f in instance.facilities:
        for c in instance.customers:
            out.append(f"a {f} {c} {_fmt_cost(instance.assignment_cost(f, c))}")
    return "\n".join(out) + "\n"
