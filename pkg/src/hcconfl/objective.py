"""Objective evaluation of facility vectors and solution validation.

``evaluate`` turns a set of open facilities into a full solution in three
steps: build a hop-feasible tree over the open facilities, assign every
customer to its cheapest open facility, then close facilities that serve
nobody (root excepted), dropping their opening cost and pruning tree
branches that only existed to reach them.

``validate`` checks a finished solution against the underlying integer
model: edge positions chain back to the root, assignments are exactly-one
and point at open facilities, the root is open, and every tree node sits
within the hop limit.  Violations are tagged with the constraint family
they break so tests can pinpoint them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hcst_nrbi import SteinerTree, TreeInfeasibleError, nrbi
from .hop_paths import HopTableCache
from .instance_model import Instance

COST_TOL = 1e-9


@dataclass(frozen=True)
class CostBreakdown:
    tree_cost: float
    assignment_cost: float
    opening_cost: float

    @property
    def total(self) -> float:
        return self.tree_cost + self.assignment_cost + self.opening_cost


@dataclass(frozen=True)
class Solution:
    """Final state of one evaluated facility vector."""

    open_facilities: frozenset[int]
    tree: SteinerTree | None
    assignment: dict[str, int]  # customer -> facility
    breakdown: CostBreakdown | None
    feasible: bool

    @property
    def total(self) -> float:
        if not self.feasible or self.breakdown is None:
            return math.inf
        return self.breakdown.total


@dataclass(frozen=True)
class Violation:
    constraint: str  # rule tag, e.g. "tree-structure", "assignment-open"
    message: str


def as_open_set(instance: Instance, vector: Iterable[int] | np.ndarray) -> set[int]:
    """Normalize a facility vector (0/1 array in facility order, or ids)."""
    arr = np.asarray(vector)
    if arr.dtype != object and arr.ndim == 1 and len(arr) == len(instance.facilities):
        if arr.dtype == bool or set(np.unique(arr)).issubset({0, 1}):
            return {f for f, bit in zip(instance.facilities, arr) if bit}
    ids = set(int(f) for f in vector)  # type: ignore[arg-type]
    unknown = ids - set(instance.facilities)
    if unknown:
        raise ValueError(f"unknown facility id {min(unknown)}")
    return ids


def infeasible_solution(open_facilities: Iterable[int]) -> Solution:
    return Solution(
        open_facilities=frozenset(open_facilities),
        tree=None,
        assignment={},
        breakdown=None,
        feasible=False,
    )


def _prune_tree(instance: Instance, tree: SteinerTree, keep: set[int]) -> SteinerTree:
    """Repeatedly drop leaves outside ``keep`` (the root never leaves)."""
    nodes = set(tree.nodes)
    edges = set(tree.edges)
    degree: dict[int, int] = {v: 0 for v in nodes}
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    parent = dict(tree.parent)
    stack = sorted(
        v for v in nodes if degree[v] <= 1 and v != tree.root and v not in keep
    )
    while stack:
        leaf = stack.pop()
        if leaf not in nodes or degree[leaf] > 1:
            continue
        nodes.discard(leaf)
        p = parent.pop(leaf, None)
        if p is None:  # isolated non-root node; nothing to unlink
            continue
        edges.discard((min(leaf, p), max(leaf, p)))
        degree[p] -= 1
        degree.pop(leaf)
        if degree[p] == 1 and p != tree.root and p not in keep:
            stack.append(p)
    depth = {v: tree.depth[v] for v in nodes}
    cost = sum(instance.edge_cost(u, v) for u, v in sorted(edges))
    return SteinerTree(
        root=tree.root,
        nodes=frozenset(nodes),
        edges=frozenset(edges),
        depth=depth,
        parent=parent,
        cost=float(cost),
    )


def evaluate(
    instance: Instance,
    open_facilities: Iterable[int] | np.ndarray,
    cache: HopTableCache | None = None,
    phase1_cost_mode: str = "insertion-path",
) -> Solution:
    """Evaluate a facility vector; infeasible vectors get an inf solution."""
    opened = as_open_set(instance, open_facilities)
    opened.add(instance.root)
    unknown = opened - set(instance.facilities)
    if unknown:
        raise ValueError(f"not a facility: {min(unknown)}")
    if cache is None:
        cache = HopTableCache(instance)

    try:
        tree = nrbi(instance, opened, cache, phase1_cost_mode=phase1_cost_mode)
    except TreeInfeasibleError:
        return infeasible_solution(opened)

    rows = np.array([instance.facility_index[f] for f in sorted(opened)])
    assignment: dict[str, int] = {}
    assignment_cost = 0.0
    used: set[int] = set()
    if instance.customers:
        sub = instance.assignment_costs[rows]
        choice = np.argmin(sub, axis=0)  # first minimum = smallest facility id
        fac_ids = sorted(opened)
        for k, customer in enumerate(instance.customers):
            fac = fac_ids[int(choice[k])]
            assignment[customer] = fac
            used.add(fac)
        assignment_cost = float(sub[choice, np.arange(len(instance.customers))].sum())

    final_open = used | {instance.root}
    if final_open != opened:
        tree = _prune_tree(instance, tree, final_open)
    opening_cost = float(sum(instance.opening_costs[f] for f in sorted(final_open)))
    return Solution(
        open_facilities=frozenset(final_open),
        tree=tree,
        assignment=assignment,
        breakdown=CostBreakdown(
            tree_cost=tree.cost,
            assignment_cost=assignment_cost,
            opening_cost=opening_cost,
        ),
        feasible=True,
    )


def validate(instance: Instance, solution: Solution) -> list[Violation]:
    """Check a solution against the integer model; empty list means clean."""
    out: list[Violation] = []
    if not solution.feasible:
        return [Violation("infeasible", "solution is marked infeasible")]
    opened = solution.open_facilities
    tree = solution.tree
    root = instance.root
    hops = instance.hop_limit

    if not opened.issubset(instance.facilities):
        bad = min(opened - set(instance.facilities))
        out.append(Violation("open-domain", f"open set contains non-facility {bad}"))
        opened = opened & set(instance.facilities)
    if root not in opened:
        out.append(Violation("root-open", "root facility is not open"))

    if tree is None:
        out.append(Violation("tree-structure", "solution has no tree"))
        tree = SteinerTree(root, frozenset({root}), frozenset(), {root: 0}, {}, 0.0)

    depth = tree.depth
    incoming: dict[int, int] = {}
    oriented: list[tuple[int, int, int]] = []  # (parent, child, position)
    for u, v in sorted(tree.edges):
        if not instance.has_edge(u, v):
            out.append(Violation("core-edge", f"tree edge ({u},{v}) is not a core edge"))
            continue
        du, dv = depth.get(u), depth.get(v)
        if du is None or dv is None:
            out.append(Violation("tree-structure", f"tree edge ({u},{v}) endpoint lacks a depth"))
            continue
        if du == dv:
            out.append(
                Violation("tree-structure", f"tree edge ({u},{v}) endpoints at equal depth {du}")
            )
            continue
        q, c = (u, v) if du < dv else (v, u)
        oriented.append((q, c, depth[c]))
        incoming[c] = incoming.get(c, 0) + 1

    for c, count in sorted(incoming.items()):
        if count > 1:
            out.append(Violation("tree-structure", f"node {c} has {count} incoming tree edges"))
    for q, c, pos in oriented:
        if pos > hops:
            out.append(
                Violation("tree-structure", f"node {c} sits at depth {pos} beyond hop limit {hops}")
            )
        if q == root:
            if pos >= 2:
                out.append(
                    Violation("root-edge-position", f"edge ({root},{c}) leaves the root at position {pos}")
                )
        else:
            if pos == 1:
                out.append(
                    Violation("root-edge-position", f"edge ({q},{c}) at position 1 does not leave the root")
                )
            else:
                if depth.get(q) != pos - 1:
                    out.append(
                        Violation(
                            "tree-structure",
                            f"edge ({q},{c}) at position {pos} has parent at depth {depth.get(q)}",
                        )
                    )
                if incoming.get(q, 0) < 1:
                    out.append(
                        Violation(
                            "tree-structure",
                            f"edge ({q},{c}) at position {pos} has no supporting edge into {q}",
                        )
                    )

    if depth.get(tree.root, None) != 0:
        out.append(Violation("tree-structure", "tree root does not sit at depth 0"))
    # connectivity: every tree node must be reachable from the root
    adj: dict[int, list[int]] = {v: [] for v in tree.nodes}
    for u, v in tree.edges:
        if u in adj and v in adj:
            adj[u].append(v)
            adj[v].append(u)
    seen = {tree.root}
    frontier = [tree.root]
    while frontier:
        x = frontier.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    stranded = set(tree.nodes) - seen
    if stranded:
        out.append(
            Violation("tree-structure", f"tree node {min(stranded)} is not connected to the root")
        )

    for f in sorted(opened):
        if f == root:
            continue
        if f not in tree.nodes or incoming.get(f, 0) < 1:
            out.append(Violation("facility-connected", f"open facility {f} has no incoming tree path"))

    for customer in instance.customers:
        fac = solution.assignment.get(customer)
        if fac is None:
            out.append(Violation("assignment-complete", f"customer {customer!r} is unassigned"))
        elif fac not in instance.facilities:
            out.append(
                Violation("known-ids", f"customer {customer!r} assigned to unknown facility {fac}")
            )
        elif fac not in opened:
            out.append(
                Violation("assignment-open", f"customer {customer!r} assigned to closed facility {fac}")
            )
    for customer in solution.assignment:
        if customer not in instance.customer_index:
            out.append(Violation("known-ids", f"assignment for unknown customer {customer!r}"))
    return out
