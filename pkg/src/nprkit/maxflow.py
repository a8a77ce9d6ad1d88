"""Exact s-t max-flow / min-cut on sparse directed networks.

Dinic's algorithm (level graph + blocking flow with current-arc pointers)
over flat arc arrays, compiled with numba. Arcs are stored in pairs: arc
2k is a forward arc and arc 2k+1 its reverse, so arc^1 is the partner.
float64 capacities are handled exactly enough for the use here: integer
capacities stay integral, and residuals never go negative because the
bottleneck is the exact minimum of the path capacities.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import InvalidInputError


class FlowNetwork:
    """Directed flow network with designated source and sink nodes.

    add_edge(u, v, cap, rev_cap) appends the arc pair (u->v with cap,
    v->u with rev_cap), so the arc list always contains the reverse of
    every arc.
    """

    def __init__(self, num_nodes: int, source: int, sink: int) -> None:
        if num_nodes < 2:
            raise InvalidInputError(f"need at least 2 nodes, got {num_nodes}")
        if not (0 <= source < num_nodes and 0 <= sink < num_nodes):
            raise InvalidInputError("source/sink out of range")
        if source == sink:
            raise InvalidInputError("source and sink must differ")
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self._from: list[int] = []
        self._to: list[int] = []
        self._cap: list[float] = []

    def add_edge(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
            raise InvalidInputError(f"arc ({u}, {v}) out of range")
        if not (math.isfinite(cap) and math.isfinite(rev_cap)):
            raise InvalidInputError("capacities must be finite")
        if cap < 0 or rev_cap < 0:
            raise InvalidInputError("capacities must be >= 0")
        self._from += [u, v]
        self._to += [v, u]
        self._cap += [cap, rev_cap]

    def arcs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self._from, dtype=np.int64),
            np.asarray(self._to, dtype=np.int64),
            np.asarray(self._cap, dtype=np.float64),
        )


def max_flow(net: FlowNetwork) -> tuple[float, np.ndarray]:
    """Exact maximum flow value and the min-cut side of every node.

    Returns (flow, source_side) where source_side[v] is True iff v is
    reachable from the source in the final residual graph; by duality the
    flow value equals the capacity of that cut.
    """
    arc_from, arc_to, arc_cap = net.arcs()
    return solve_max_flow(
        net.num_nodes, net.source, net.sink, arc_from, arc_to, arc_cap
    )


def solve_max_flow(
    num_nodes: int,
    source: int,
    sink: int,
    arc_from: np.ndarray,
    arc_to: np.ndarray,
    arc_cap: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Array-level entry point; arcs must be in forward/reverse pairs."""
    if len(arc_from) == 0:
        side = np.zeros(num_nodes, dtype=np.bool_)
        side[source] = True
        return 0.0, side
    # adjacency as CSR over arc ids, stable so results are reproducible
    order = np.argsort(arc_from, kind="stable").astype(np.int64)
    counts = np.bincount(arc_from, minlength=num_nodes)
    adj_start = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=adj_start[1:])
    residual = arc_cap.astype(np.float64, copy=True)
    flow, source_side = _dinic(
        num_nodes,
        source,
        sink,
        arc_to.astype(np.int64, copy=False),
        residual,
        adj_start,
        order,
    )
    return float(flow), source_side


@njit(cache=True, nogil=True)
def _dinic(n, source, sink, arc_to, arc_cap, adj_start, adj_arcs):  # pragma: no cover
    level = np.empty(n, dtype=np.int64)
    iter_ptr = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    path = np.empty(n + 1, dtype=np.int64)
    total = 0.0
    while True:
        # BFS over positive-residual arcs builds the level graph
        level[:] = -1
        level[source] = 0
        queue[0] = source
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            for idx in range(adj_start[v], adj_start[v + 1]):
                a = adj_arcs[idx]
                u = arc_to[a]
                if arc_cap[a] > 0.0 and level[u] < 0:
                    level[u] = level[v] + 1
                    queue[tail] = u
                    tail += 1
        if level[sink] < 0:
            break
        for v in range(n):
            iter_ptr[v] = adj_start[v]
        # blocking flow: DFS with per-node current-arc pointers
        depth = 0
        v = source
        while True:
            if v == sink:
                bottleneck = np.inf
                for i in range(depth):
                    a = path[i]
                    if arc_cap[a] < bottleneck:
                        bottleneck = arc_cap[a]
                for i in range(depth):
                    a = path[i]
                    arc_cap[a] -= bottleneck
                    arc_cap[a ^ 1] += bottleneck
                total += bottleneck
                # retreat to the shallowest saturated arc on the path
                new_depth = depth
                for i in range(depth):
                    if arc_cap[path[i]] <= 0.0:
                        new_depth = i
                        break
                depth = new_depth
                v = source if depth == 0 else arc_to[path[depth - 1]]
                continue
            advanced = False
            while iter_ptr[v] < adj_start[v + 1]:
                a = adj_arcs[iter_ptr[v]]
                u = arc_to[a]
                if arc_cap[a] > 0.0 and level[u] == level[v] + 1:
                    path[depth] = a
                    depth += 1
                    v = u
                    advanced = True
                    break
                iter_ptr[v] += 1
            if advanced:
                continue
            # dead end: drop v from the level graph and backtrack
            level[v] = -1
            if depth == 0:
                break
            depth -= 1
            v = source if depth == 0 else arc_to[path[depth - 1]]
    source_side = level >= 0
    return total, source_side
