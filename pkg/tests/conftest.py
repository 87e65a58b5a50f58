"""Shared topologies used across the suite.

Edges are (tail, head): the tail assigns the weight and the edge carries
flow tail -> head.
"""
from __future__ import annotations

import pytest

from balnet.digraph import Digraph, build_digraph


def three_node_graph() -> Digraph:
    """Two-cycle 0<->2 plus the chord path 0->1->2."""
    return build_digraph(3, [(0, 1), (1, 2), (2, 0), (0, 2)])


def chained_cycles_graph() -> tuple[Digraph, list[list[int]], list[int]]:
    """Eight nodes arranged as four node-sharing cycles plus one closing
    edge 7->0, so exactly one unit of imbalance sits at node 0 and one
    deficit at node 7.

    Returns (graph, out-orderings, activation script): activating the
    nodes in script order moves the surplus around the cycles and
    balances the graph on the last activation.
    """
    pairs = [
        (0, 1), (1, 2), (2, 0),            # cycle 0-1-2
        (1, 3), (3, 4), (4, 2), (2, 1),    # cycle 1-3-4-2
        (3, 5), (5, 6), (6, 4), (4, 3),    # cycle 3-5-6-4
        (5, 7), (7, 6), (6, 5),            # cycle 5-7-6
        (7, 0),                            # closing edge
    ]
    g = build_digraph(8, pairs)
    orderings = [
        [g.edge_id(0, 1)],
        [g.edge_id(1, 2), g.edge_id(1, 3)],
        [g.edge_id(2, 0), g.edge_id(2, 1)],
        [g.edge_id(3, 4), g.edge_id(3, 5)],
        [g.edge_id(4, 2), g.edge_id(4, 3)],
        [g.edge_id(5, 6), g.edge_id(5, 7)],
        [g.edge_id(6, 4), g.edge_id(6, 5)],
        [g.edge_id(7, 6), g.edge_id(7, 0)],
    ]
    script = [0, 1, 2,
              0, 1, 3, 4, 2, 1, 2,
              0, 1, 3, 5, 6, 4, 3, 4, 2, 1, 2,
              0, 1, 3, 5]
    return g, orderings, script


def priority_demo_graph() -> tuple[Digraph, list[list[int]]]:
    """Six-node digraph (12 edges) with hand-picked out-edge priorities;
    with unit weights exactly nodes 0, 1 and 3 carry a +1 imbalance."""
    pairs = [
        (0, 2),
        (1, 2),
        (2, 0), (2, 1), (2, 3),
        (3, 4), (3, 5),
        (4, 0), (4, 2), (4, 3),
        (5, 1), (5, 3),
    ]
    g = build_digraph(6, pairs)
    priorities = [
        [g.edge_id(0, 2)],
        [g.edge_id(1, 2)],
        [g.edge_id(2, 0), g.edge_id(2, 1), g.edge_id(2, 3)],
        [g.edge_id(3, 4), g.edge_id(3, 5)],
        [g.edge_id(4, 0), g.edge_id(4, 2), g.edge_id(4, 3)],
        [g.edge_id(5, 1), g.edge_id(5, 3)],
    ]
    return g, priorities


def four_ring() -> tuple[Digraph, list[list[tuple[int, bool]]], list[int]]:
    """Directed 4-ring with out-edge-first incident orders and the mixed
    starting weights (1, 1, 2, 2) that expose round-robin periodicity.

    Returns (graph, incident orders, initial weights by edge id).
    """
    g = build_digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    orders = []
    for j in range(4):
        orders.append(
            [(eid, True) for eid in g.out_edge_ids[j]]
            + [(eid, False) for eid in g.in_edge_ids[j]]
        )
    by_pair = {(0, 1): 1, (1, 2): 1, (2, 3): 2, (3, 0): 2}
    initial = [by_pair[(e.tail, e.head)] for e in g.edges]
    return g, orders, initial


@pytest.fixture
def three_node():
    return three_node_graph()
