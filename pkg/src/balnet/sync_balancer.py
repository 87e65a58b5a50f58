"""Synchronous distributed balancer: positive nodes spread their total
in-weight evenly over their out-edges, negative nodes shed weight down
to an imbalance of -1, and every weight stays a positive integer.
"""
from __future__ import annotations

from dataclasses import dataclass

from .digraph import Digraph, imbalances, total_imbalance_list
from .ordering import seeded_out_orderings


class BadInitWeightError(ValueError):
    pass


class NotStronglyConnectedError(ValueError):
    pass


class DivergedError(RuntimeError):
    pass


@dataclass
class SyncState:
    g: Digraph
    weights: list[int]
    orderings: list[list[int]]  # per node: out-edge ids, highest priority first
    round: int = 0


@dataclass
class SyncResult:
    weights: list[int]
    rounds: int
    trace: list[int]  # total imbalance entering each round, then final
    x_trace: list[list[int]]
    converged: bool = True


def init_sync(
    g: Digraph,
    init_weight: int,
    ordering_seed: int = 0,
    orderings: list[list[int]] | None = None,
) -> SyncState:
    """All edge weights start at ``init_weight``; each node fixes a
    (seeded or explicit) priority order over its out-edges."""
    if init_weight < 1:
        raise BadInitWeightError(f"init weight must be >= 1, got {init_weight}")
    if orderings is None:
        orderings = seeded_out_orderings(g, ordering_seed)
    weights = [init_weight] * g.m
    state = SyncState(g=g, weights=weights, orderings=orderings)
    # Worst-case initial imbalance: every node has between 1 and n-1 edges
    # each way, so |x_j| <= init_weight * (n-2).
    if g.n > 2:
        assert total_imbalance_list(g, weights) <= init_weight * g.n * (g.n - 2)
    return state


def allocate_even(total: int, edge_ids: list[int], bonus: int) -> dict[int, int]:
    """Spread ``total`` over the edges with pairwise difference <= 1; the
    first ``(total % d) + bonus`` edges in priority order get the extra 1."""
    d = len(edge_ids)
    base, rem = divmod(total, d)
    rem += bonus
    return {eid: base + (1 if pos < rem else 0) for pos, eid in enumerate(edge_ids)}


def _node_update(s: SyncState, j: int, x: list[int]) -> dict[int, int] | None:
    """New out-weights for node j under the frozen current snapshot, or
    None when the node leaves them unchanged (imbalance 0 or -1)."""
    xj = x[j]
    if xj == 0 or xj == -1:
        return None
    in_sum = sum(s.weights[e] for e in s.g.in_edge_ids[j])
    order = s.orderings[j]
    d = len(order)
    if xj > 0:
        return allocate_even(in_sum, order, bonus=0)
    if in_sum // d >= 1:
        return allocate_even(in_sum, order, bonus=1)
    return {eid: 1 for eid in order}


def step_sync(s: SyncState) -> SyncState:
    """One synchronous round: every node reads the frozen weights and
    rewrites its own out-edges (each edge has a single writer)."""
    x = imbalances(s.g, s.weights)
    new_weights = list(s.weights)
    for j in range(s.g.n):
        upd = _node_update(s, j, x)
        if upd:
            for eid, w in upd.items():
                new_weights[eid] = w
    return SyncState(g=s.g, weights=new_weights, orderings=s.orderings, round=s.round + 1)


def step_async(s: SyncState, active: int) -> SyncState:
    """Only the active node applies its rule; everyone else holds."""
    x = imbalances(s.g, s.weights)
    new_weights = list(s.weights)
    upd = _node_update(s, active, x)
    if upd:
        for eid, w in upd.items():
            new_weights[eid] = w
    return SyncState(g=s.g, weights=new_weights, orderings=s.orderings, round=s.round + 1)


def run_sync(s: SyncState, max_rounds: int | None = None, strict: bool = True) -> SyncResult:
    """Iterate synchronous rounds until balanced.

    The default budget m^2 * eps0 / 2 is a proven worst-case ceiling for
    strongly connected inputs, so exhausting it signals a bug; pass
    ``strict=False`` to get a non-converged result back instead.
    """
    eps0 = total_imbalance_list(s.g, s.weights)
    if max_rounds is None:
        max_rounds = max(1, (s.g.m**2) * eps0 // 2)
    trace = [eps0]
    x_trace = [imbalances(s.g, s.weights)]
    state = s
    rounds = 0
    while trace[-1] > 0:
        if rounds >= max_rounds:
            if strict:
                raise DivergedError(f"not balanced after {max_rounds} rounds")
            return SyncResult(state.weights, rounds, trace, x_trace, converged=False)
        state = step_sync(state)
        rounds += 1
        x = imbalances(state.g, state.weights)
        x_trace.append(x)
        trace.append(sum(abs(v) for v in x))
    return SyncResult(weights=state.weights, rounds=rounds, trace=trace, x_trace=x_trace)
