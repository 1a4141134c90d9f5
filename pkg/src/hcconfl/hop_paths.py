"""Hop-limited shortest paths on the core graph.

The central object is a per-source table ``dist[h][v]`` = cheapest cost of a
walk from the source to ``v`` using at most ``h`` edges, computed by a
Bellman-Ford sweep over hop levels.  Rows are nonincreasing in ``h``.  Ties
between equal-cost paths are broken toward fewer hops, then toward the
smaller predecessor id, which makes extracted paths deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance_model import Instance


@dataclass(frozen=True)
class HopDistanceTable:
    """Distances and predecessors from one source, per hop budget.

    ``dist`` has shape (hop_limit + 1, num_nodes + 1); column 0 is unused so
    node ids index directly.  ``pred[h][v]`` is the predecessor of ``v`` on
    the chosen cheapest walk of at most ``h`` edges (0 = none).
    """

    source: int
    hop_limit: int
    dist: np.ndarray
    pred: np.ndarray

    def cost(self, node: int, hop_budget: int | None = None) -> float:
        """Cheapest cost to ``node`` within ``hop_budget`` edges (inf if none)."""
        h = self.hop_limit if hop_budget is None else min(hop_budget, self.hop_limit)
        if h < 0:
            return math.inf
        return float(self.dist[h, node])

    def reachable(self, node: int, hop_budget: int | None = None) -> bool:
        return math.isfinite(self.cost(node, hop_budget))

    def min_hops(self, node: int, hop_budget: int | None = None) -> int | None:
        """Fewest edges realizing ``cost(node, hop_budget)``; None if unreachable."""
        h = self.hop_limit if hop_budget is None else min(hop_budget, self.hop_limit)
        if h < 0:
            return None
        target = self.dist[h, node]
        if not math.isfinite(target):
            return None
        col = self.dist[: h + 1, node]
        # carried-over entries are bit-identical copies, so == is exact here
        return int(np.argmax(col == target))


def hop_bellman_ford(
    instance: Instance, source: int, hop_limit: int | None = None
) -> HopDistanceTable:
    """Build the hop-indexed distance/predecessor table for one source."""
    if not (1 <= source <= instance.num_nodes):
        raise ValueError(f"source {source} is not a core node")
    hops = instance.hop_limit if hop_limit is None else hop_limit
    if hops < 0:
        raise ValueError(f"hop limit must be >= 0, got {hops}")
    n = instance.num_nodes
    dist = np.full((hops + 1, n + 1), np.inf)
    pred = np.zeros((hops + 1, n + 1), dtype=np.int32)
    dist[0, source] = 0.0
    src = instance._arc_src  # type: ignore[attr-defined]
    dst = instance._arc_dst  # type: ignore[attr-defined]
    wgt = instance._arc_cost  # type: ignore[attr-defined]
    for h in range(1, hops + 1):
        prev = dist[h - 1]
        cand = prev[src] + wgt
        # per destination pick the min candidate, ties toward smaller source
        order = np.lexsort((src, cand))
        best_at = np.full(n + 1, -1, dtype=np.int64)
        best_at[dst[order[::-1]]] = order[::-1]
        cur = prev.copy()
        cur_pred = pred[h - 1].copy()
        nodes = np.nonzero(best_at >= 0)[0]
        picks = best_at[nodes]
        vals = cand[picks]
        better = vals < cur[nodes]  # strict: equal cost keeps the shorter walk
        upd = nodes[better]
        cur[upd] = vals[better]
        cur_pred[upd] = src[picks[better]]
        dist[h] = cur
        pred[h] = cur_pred
    dist.setflags(write=False)
    pred.setflags(write=False)
    return HopDistanceTable(source=source, hop_limit=hops, dist=dist, pred=pred)


def extract_path(
    table: HopDistanceTable, target: int, hop_budget: int | None = None
) -> list[int] | None:
    """Recover the chosen source->target node path within ``hop_budget``.

    Returns None when the target is unreachable inside the budget.  The path
    realizes ``table.cost(target, hop_budget)`` with the fewest edges among
    equal-cost walks.
    """
    h = table.min_hops(target, hop_budget)
    if h is None:
        return None
    path = [target]
    node = target
    while node != table.source:
        if h <= 0:
            raise AssertionError("predecessor chain did not reach the source")
        node = int(table.pred[h, node])
        h -= 1
        path.append(node)
    path.reverse()
    return path


class HopTableCache:
    """Lazy per-source table cache for the lifetime of one solver run."""

    def __init__(self, instance: Instance, hop_limit: int | None = None):
        self.instance = instance
        self.hop_limit = instance.hop_limit if hop_limit is None else hop_limit
        self._tables: dict[int, HopDistanceTable] = {}

    def table(self, source: int) -> HopDistanceTable:
        tab = self._tables.get(source)
        if tab is None:
            tab = hop_bellman_ford(self.instance, source, self.hop_limit)
            self._tables[source] = tab
        return tab
