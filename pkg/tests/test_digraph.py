import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from balnet.digraph import (
    DuplicateEdgeError,
    Edge,
    IndexOutOfRangeError,
    MissingWeightError,
    SelfLoopError,
    TooFewNodesError,
    build_digraph,
    graph_from_json_dict,
    graph_to_json_dict,
    imbalances,
    is_strongly_connected,
    node_imbalance,
    random_strongly_connected,
    total_imbalance,
)
from conftest import chained_cycles_graph, three_node_graph


def test_two_cycle():
    g = build_digraph(2, [(0, 1), (1, 0)])
    assert g.m == 2
    assert is_strongly_connected(g)


def test_chain_not_strongly_connected():
    g = build_digraph(3, [(0, 1), (1, 2)])
    assert not is_strongly_connected(g)


def test_build_errors():
    with pytest.raises(SelfLoopError):
        build_digraph(3, [(0, 0)])
    with pytest.raises(DuplicateEdgeError):
        build_digraph(3, [(0, 1), (0, 1)])
    with pytest.raises(IndexOutOfRangeError):
        build_digraph(3, [(0, 3)])
    with pytest.raises(TooFewNodesError):
        build_digraph(1, [])


def test_adjacency_mirrors_edges():
    g = three_node_graph()
    assert g.out_neighbors[0] == (1, 2)
    assert g.in_neighbors[2] == (0, 1)
    assert g.out_degree(0) == 2 and g.in_degree(0) == 1


def test_ring_imbalance_values():
    # Mixed ring weights put +1 at node 0 and -1 at node 2.
    g = build_digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    w = {Edge(0, 1): 1, Edge(1, 2): 1, Edge(2, 3): 2, Edge(3, 0): 2}
    assert node_imbalance(g, w, 0) == 1
    assert node_imbalance(g, w, 2) == -1
    assert node_imbalance(g, w, 1) == 0
    assert node_imbalance(g, w, 3) == 0
    assert total_imbalance(g, w) == 2


def test_equal_ring_weights_balanced():
    g = build_digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    w = {e: 5 for e in g.edges}
    assert total_imbalance(g, w) == 0


def test_three_node_imbalance():
    g = three_node_graph()
    w = {e: 1 for e in g.edges}
    assert node_imbalance(g, w, 0) == -1
    assert node_imbalance(g, w, 1) == 0
    assert node_imbalance(g, w, 2) == 1


def test_chained_cycles_unit_imbalance():
    g, _, _ = chained_cycles_graph()
    w = {e: 1 for e in g.edges}
    x = [node_imbalance(g, w, j) for j in range(8)]
    assert total_imbalance(g, w) == 2
    assert x[0] == 1 and x[7] == -1
    assert sum(1 for v in x if v > 0) == 1


def test_missing_weight():
    g = three_node_graph()
    w = {e: 1 for e in g.edges[:-1]}
    with pytest.raises(MissingWeightError):
        total_imbalance(g, w)


def test_generator_deterministic():
    a = random_strongly_connected(12, 0.3, seed=99)
    b = random_strongly_connected(12, 0.3, seed=99)
    assert a.edges == b.edges
    c = random_strongly_connected(12, 0.3, seed=100)
    assert a.edges != c.edges


def test_generator_two_nodes_zero_prob():
    g = random_strongly_connected(2, 0.0, seed=0)
    assert sorted((e.tail, e.head) for e in g.edges) == [(0, 1), (1, 0)]


@pytest.mark.parametrize("seed", range(10))
def test_generator_strongly_connected_networkx_oracle(seed):
    g = random_strongly_connected(20, 0.2, seed=seed)
    assert is_strongly_connected(g)
    nxg = nx.DiGraph([(e.tail, e.head) for e in g.edges])
    nxg.add_nodes_from(range(g.n))
    assert nx.is_strongly_connected(nxg)


@pytest.mark.parametrize("seed", range(6))
def test_scc_check_agrees_with_networkx_on_sparse_graphs(seed):
    # Raw Bernoulli digraphs are often not strongly connected.
    import random as _random

    rng = _random.Random(seed)
    n = 8
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < 0.15]
    if not pairs:
        pairs = [(0, 1)]
    g = build_digraph(n, pairs)
    nxg = nx.DiGraph(pairs)
    nxg.add_nodes_from(range(n))
    assert is_strongly_connected(g) == nx.is_strongly_connected(nxg)


@given(
    n=st.integers(2, 8),
    seed=st.integers(0, 10_000),
    wseed=st.integers(0, 10_000),
)
@settings(max_examples=60, deadline=None)
def test_conservation_and_parity(n, seed, wseed):
    """Imbalances always sum to zero and the total is always even."""
    import random as _random

    g = random_strongly_connected(n, 0.35, seed=seed)
    rng = _random.Random(wseed)
    wlist = [rng.randint(0, 9) for _ in range(g.m)]
    x = imbalances(g, wlist)
    assert sum(x) == 0
    eps = sum(abs(v) for v in x)
    assert eps % 2 == 0
    assert eps == 2 * sum(-v for v in x if v < 0)


def test_json_roundtrip():
    g = three_node_graph()
    d = graph_to_json_dict(g)
    assert d["n"] == 3
    assert graph_from_json_dict(d).edges == g.edges
