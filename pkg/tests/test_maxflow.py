"""Max-flow solver tests, including brute-force min-cut enumeration."""

from __future__ import annotations

import numpy as np
import pytest

from nprkit.errors import InvalidInputError
from nprkit.maxflow import FlowNetwork, max_flow


def _min_cut_enumeration(num_nodes: int, source: int, sink: int, arcs) -> float:
    """Minimum cut by checking every source-side subset of internal nodes."""
    internal = [v for v in range(num_nodes) if v not in (source, sink)]
    k = len(internal)
    subsets = np.arange(1 << k, dtype=np.uint32)
    in_s = np.ones((1 << k, num_nodes), dtype=bool)
    in_s[:, sink] = False
    for bit, node in enumerate(internal):
        in_s[:, node] = (subsets >> bit) & 1
    cut = np.zeros(1 << k)
    for u, v, cap in arcs:
        cut += cap * (in_s[:, u] & ~in_s[:, v])
    return float(cut.min())


def _cut_capacity(arcs, side) -> float:
    return float(sum(cap for u, v, cap in arcs if side[u] and not side[v]))


def test_single_arc():
    net = FlowNetwork(2, 0, 1)
    net.add_edge(0, 1, 7.0)
    flow, side = max_flow(net)
    assert flow == 7.0
    assert side[0] and not side[1]


def test_diamond_with_cross_arc():
    net = FlowNetwork(4, 0, 3)
    net.add_edge(0, 1, 3.0)
    net.add_edge(0, 2, 2.0)
    net.add_edge(1, 3, 2.0)
    net.add_edge(2, 3, 3.0)
    net.add_edge(1, 2, 1.0)
    flow, side = max_flow(net)
    assert flow == 5.0
    assert side[0] and not side[3]


def test_no_path_gives_zero_flow():
    net = FlowNetwork(4, 0, 3)
    net.add_edge(0, 1, 5.0)
    net.add_edge(2, 3, 5.0)
    flow, side = max_flow(net)
    assert flow == 0.0
    assert side[0] and side[1]
    assert not side[2] and not side[3]


def test_empty_network():
    net = FlowNetwork(3, 0, 2)
    flow, side = max_flow(net)
    assert flow == 0.0
    assert side[0] and not side[2]


def test_rev_cap_arcs_carry_flow_both_ways():
    # one add_edge call installs both directions
    net = FlowNetwork(2, 0, 1)
    net.add_edge(1, 0, 2.0, rev_cap=6.0)
    flow, _ = max_flow(net)
    assert flow == 6.0


def test_parallel_arcs_accumulate():
    net = FlowNetwork(2, 0, 1)
    net.add_edge(0, 1, 2.0)
    net.add_edge(0, 1, 3.5)
    flow, _ = max_flow(net)
    assert flow == 5.5


def test_fractional_capacities():
    net = FlowNetwork(3, 0, 2)
    net.add_edge(0, 1, 0.25)
    net.add_edge(1, 2, 0.75)
    flow, _ = max_flow(net)
    assert flow == 0.25


def test_random_networks_match_enumeration():
    """60 random small networks against the exponential cut enumeration.

    Also checks strong duality on the returned partition: the capacity
    crossing the reported side must equal the flow value exactly, since
    integer capacities keep every augmentation in exact float arithmetic.
    """
    rng = np.random.default_rng(97)
    for _ in range(60):
        internal = int(rng.integers(1, 11))
        n = internal + 2
        source, sink = 0, n - 1
        net = FlowNetwork(n, source, sink)
        arcs = []
        for u in range(n):
            for v in range(n):
                if u == v or rng.random() > 0.35:
                    continue
                cap = float(rng.integers(1, 21))
                net.add_edge(u, v, cap)
                arcs.append((u, v, cap))
                arcs.append((v, u, 0.0))
        flow, side = max_flow(net)
        assert flow == _min_cut_enumeration(n, source, sink, arcs)
        assert side[source] and not side[sink]
        assert _cut_capacity(arcs, side) == flow


def test_network_validation():
    with pytest.raises(InvalidInputError):
        FlowNetwork(1, 0, 0)
    with pytest.raises(InvalidInputError):
        FlowNetwork(4, 0, 4)
    with pytest.raises(InvalidInputError):
        FlowNetwork(4, 2, 2)
    net = FlowNetwork(3, 0, 2)
    with pytest.raises(InvalidInputError):
        net.add_edge(0, 3, 1.0)
    with pytest.raises(InvalidInputError):
        net.add_edge(0, 1, -1.0)
    with pytest.raises(InvalidInputError):
        net.add_edge(0, 1, np.inf)


def test_arc_arrays_are_paired():
    net = FlowNetwork(3, 0, 2)
    net.add_edge(0, 1, 4.0, rev_cap=1.0)
    net.add_edge(1, 2, 2.0)
    arc_from, arc_to, arc_cap = net.arcs()
    assert np.array_equal(arc_from, [0, 1, 1, 2])
    assert np.array_equal(arc_to, [1, 0, 2, 1])
    assert np.array_equal(arc_cap, [4.0, 1.0, 2.0, 0.0])
