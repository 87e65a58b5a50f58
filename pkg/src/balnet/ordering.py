"""Seeded, reproducible edge orderings shared by the balancers."""
from __future__ import annotations

import random

from .digraph import Digraph


def seeded_out_orderings(g: Digraph, seed: int) -> list[list[int]]:
    """Per node, a fixed random permutation of its out-edge ids."""
    orderings = []
    for j in range(g.n):
        rng = random.Random(f"{seed}:out:{j}")
        order = list(g.out_edge_ids[j])
        rng.shuffle(order)
        orderings.append(order)
    return orderings


def seeded_incident_orderings(g: Digraph, seed: int) -> list[list[tuple[int, bool]]]:
    """Per node, a fixed random permutation over all incident edges.

    Entries are (edge_id, is_out); the capacity balancers walk this
    combined order round-robin.
    """
    orderings = []
    for j in range(g.n):
        rng = random.Random(f"{seed}:inc:{j}")
        order = [(eid, True) for eid in g.out_edge_ids[j]]
        order += [(eid, False) for eid in g.in_edge_ids[j]]
        rng.shuffle(order)
        orderings.append(order)
    return orderings
