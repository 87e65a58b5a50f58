"""Directed graphs, integer edge weights, and node imbalance arithmetic.

Edges are stored as (tail, head) pairs: the edge carries flow from its
tail to its head, and the tail node is the one that assigns the edge's
weight in every balancing protocol built on top of this module.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field


class GraphError(ValueError):
    pass


class TooFewNodesError(GraphError):
    pass


class IndexOutOfRangeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class MissingWeightError(GraphError):
    pass


@dataclass(frozen=True, order=True)
class Edge:
    tail: int
    head: int


@dataclass(frozen=True)
class Digraph:
    """Immutable digraph with canonical (sorted) edge order.

    Adjacency and per-node edge-id lists are precomputed so the round-based
    simulators can work on flat integer arrays.
    """

    n: int
    edges: tuple[Edge, ...]
    out_neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    in_neighbors: tuple[tuple[int, ...], ...] = field(repr=False)
    out_edge_ids: tuple[tuple[int, ...], ...] = field(repr=False)
    in_edge_ids: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_id(self, tail: int, head: int) -> int:
        return self._index[(tail, head)]

    def has_edge(self, tail: int, head: int) -> bool:
        return (tail, head) in self._index

    def out_degree(self, j: int) -> int:
        return len(self.out_edge_ids[j])

    def in_degree(self, j: int) -> int:
        return len(self.in_edge_ids[j])

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {(e.tail, e.head): i for i, e in enumerate(self.edges)}
        )


def build_digraph(n: int, edge_pairs) -> Digraph:
    """Build a digraph from (tail, head) pairs, validating each edge."""
    if n < 2:
        raise TooFewNodesError(f"need at least 2 nodes, got {n}")
    seen = set()
    edges = []
    for tail, head in edge_pairs:
        if not (0 <= tail < n and 0 <= head < n):
            raise IndexOutOfRangeError(f"edge ({tail},{head}) out of range for n={n}")
        if tail == head:
            raise SelfLoopError(f"self-loop at node {tail}")
        if (tail, head) in seen:
            raise DuplicateEdgeError(f"duplicate edge ({tail},{head})")
        seen.add((tail, head))
        edges.append(Edge(tail, head))
    edges.sort()
    out_nbrs = [[] for _ in range(n)]
    in_nbrs = [[] for _ in range(n)]
    out_ids = [[] for _ in range(n)]
    in_ids = [[] for _ in range(n)]
    for i, e in enumerate(edges):
        out_nbrs[e.tail].append(e.head)
        in_nbrs[e.head].append(e.tail)
        out_ids[e.tail].append(i)
        in_ids[e.head].append(i)
    return Digraph(
        n=n,
        edges=tuple(edges),
        out_neighbors=tuple(tuple(x) for x in out_nbrs),
        in_neighbors=tuple(tuple(x) for x in in_nbrs),
        out_edge_ids=tuple(tuple(x) for x in out_ids),
        in_edge_ids=tuple(tuple(x) for x in in_ids),
    )


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every ordered node pair is joined by a directed path."""
    if g.n == 0:
        return False

    def reaches_all(neighbors) -> bool:
        seen = [False] * g.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for w in neighbors[v]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        return count == g.n

    return reaches_all(g.out_neighbors) and reaches_all(g.in_neighbors)


def weights_to_list(g: Digraph, weights: dict[Edge, int]) -> list[int]:
    """Convert an edge->weight mapping to the canonical edge-id order."""
    out = []
    for e in g.edges:
        if e not in weights:
            raise MissingWeightError(f"no weight for edge ({e.tail},{e.head})")
        out.append(weights[e])
    return out


def weights_to_dict(g: Digraph, wlist) -> dict[Edge, int]:
    return {e: wlist[i] for i, e in enumerate(g.edges)}


def imbalances(g: Digraph, wlist) -> list[int]:
    """Per-node imbalance: total in-weight minus total out-weight."""
    x = [0] * g.n
    for i, e in enumerate(g.edges):
        w = wlist[i]
        x[e.head] += w
        x[e.tail] -= w
    return x


def node_imbalance(g: Digraph, weights: dict[Edge, int], j: int) -> int:
    if not (0 <= j < g.n):
        raise IndexOutOfRangeError(f"node {j} out of range")
    return imbalances(g, weights_to_list(g, weights))[j]


def total_imbalance(g: Digraph, weights: dict[Edge, int]) -> int:
    """Sum of absolute node imbalances; zero iff the digraph is balanced."""
    return sum(abs(x) for x in imbalances(g, weights_to_list(g, weights)))


def total_imbalance_list(g: Digraph, wlist) -> int:
    return sum(abs(x) for x in imbalances(g, wlist))


def random_strongly_connected(n: int, extra_edge_prob: float, seed: int) -> Digraph:
    """Seeded random digraph: a Hamiltonian cycle over a shuffled node order
    plus an independent Bernoulli draw for every remaining ordered pair.

    The embedded cycle guarantees strong connectivity without rejection
    sampling; identical (n, extra_edge_prob, seed) yields identical graphs.
    """
    if n < 2:
        raise TooFewNodesError(f"need at least 2 nodes, got {n}")
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    cycle = set()
    for i in range(n):
        cycle.add((order[i], order[(i + 1) % n]))
    pairs = list(cycle)
    for tail in range(n):
        for head in range(n):
            if tail == head or (tail, head) in cycle:
                continue
            if rng.random() < extra_edge_prob:
                pairs.append((tail, head))
    return build_digraph(n, pairs)


def graph_to_json_dict(g: Digraph) -> dict:
    return {"n": g.n, "edges": [[e.tail, e.head] for e in g.edges]}


def graph_from_json_dict(data: dict) -> Digraph:
    return build_digraph(int(data["n"]), [(int(a), int(b)) for a, b in data["edges"]])
