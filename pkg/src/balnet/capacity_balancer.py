"""Capacity-constrained balancing with reliable instantaneous exchange.

Every node walks one fixed round-robin order over all of its incident
edges (incoming and outgoing together, cursor persisting across rounds)
and proposes unit changes: +1 on an out-edge below its upper bound, -1
on an in-edge above its lower bound.  Both endpoints' proposals for an
edge are summed onto the old weight each round.

Modes
* ``standard``: only nodes with positive imbalance act.
* ``enhanced``: nodes with imbalance below -1 also act, mirroring the
  signs, until they sit at -1.
* ``naive``: negative nodes greedily drive themselves all the way to 0;
  kept because it exhibits periodic non-convergence.
* ``targeted``: like enhanced, but measured against per-node desired
  imbalances that sum to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .digraph import Digraph, imbalances, is_strongly_connected
from .feasibility import CapacityBounds, check_edge_intervals
from .ordering import seeded_incident_orderings
from .sync_balancer import NotStronglyConnectedError

STANDARD = "standard"
ENHANCED = "enhanced"
NAIVE = "naive"
TARGETED = "targeted"
MODES = (STANDARD, ENHANCED, NAIVE, TARGETED)


class InfeasibleEdgeIntervalError(ValueError):
    pass


class BadTargetsError(ValueError):
    pass


@dataclass
class CapState:
    g: Digraph
    lo: list[int]
    hi: list[int]
    weights: list[int]
    orders: list[list[tuple[int, bool]]]  # per node: (edge_id, is_out)
    cursors: list[int]
    targets: list[int]
    mode: str = STANDARD
    round: int = 0
    clamp_engaged: int = 0

    def check_bounds(self) -> None:
        for i, w in enumerate(self.weights):
            assert self.lo[i] <= w <= self.hi[i], (
                f"weight {w} outside [{self.lo[i]},{self.hi[i]}] on edge {i}"
            )


@dataclass
class CapResult:
    final_weights: list[int]
    rounds: int
    converged: bool
    trace: list[int]  # total imbalance per round (entering), then final
    x_trace: list[list[int]] = field(default_factory=list)
    weight_trace: list[list[int]] = field(default_factory=list)
    clamp_engaged: int = 0


def init_cap(
    g: Digraph,
    b: CapacityBounds,
    ordering_seed: int = 0,
    orders: list[list[tuple[int, bool]]] | None = None,
    initial_weights: list[int] | None = None,
    targets: list[int] | None = None,
    mode: str = STANDARD,
) -> CapState:
    """Weights start at the ceil of each lower bound (or a caller-chosen
    in-bounds assignment); orders are seeded unless given explicitly."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    for e, ok in check_edge_intervals(g, b):
        if not ok:
            raise InfeasibleEdgeIntervalError(
                f"no integer in [l,u] on edge ({e.tail},{e.head})"
            )
    lo, hi = b.int_bounds(g)
    if initial_weights is None:
        weights = list(lo)
    else:
        weights = list(initial_weights)
        for i, w in enumerate(weights):
            if not (lo[i] <= w <= hi[i]):
                raise InfeasibleEdgeIntervalError(f"initial weight {w} off-bounds on edge {i}")
    if orders is None:
        orders = seeded_incident_orderings(g, ordering_seed)
    if targets is None:
        targets = [0] * g.n
    elif sum(targets) != 0:
        raise BadTargetsError("desired imbalances must sum to zero")
    return CapState(
        g=g, lo=lo, hi=hi, weights=weights,
        orders=orders, cursors=[0] * g.n, targets=list(targets), mode=mode,
    )


def _walk(s: CapState, j: int, shifted: int, raising: bool) -> dict[int, int]:
    """Round-robin unit changes for node j.

    ``shifted`` is the imbalance relative to the node's target; when
    ``raising`` is False the walk lowers it to 0 (+1 out / -1 in), when
    True it raises it toward the stop value (-1 out / +1 in).  Gives up
    after one full sweep finds every edge saturated.
    """
    order = s.orders[j]
    d = len(order)
    pending: dict[int, int] = {}
    misses = 0
    while shifted != 0 and misses < d:
        eid, is_out = order[s.cursors[j]]
        w = s.weights[eid] + pending.get(eid, 0)
        applied = False
        if not raising:
            if is_out and w < s.hi[eid]:
                pending[eid] = pending.get(eid, 0) + 1
                shifted -= 1
                applied = True
            elif not is_out and w > s.lo[eid]:
                pending[eid] = pending.get(eid, 0) - 1
                shifted -= 1
                applied = True
        else:
            if is_out and w > s.lo[eid]:
                pending[eid] = pending.get(eid, 0) - 1
                shifted += 1
                applied = True
            elif not is_out and w < s.hi[eid]:
                pending[eid] = pending.get(eid, 0) + 1
                shifted += 1
                applied = True
        misses = 0 if applied else misses + 1
        s.cursors[j] = (s.cursors[j] + 1) % d
    return {eid: c for eid, c in pending.items() if c != 0}


def propose_changes(s: CapState, j: int, x_j: int) -> dict[int, int]:
    """Desired unit changes for node j this round (empty when it holds)."""
    y = x_j - s.targets[j]
    if y > 0:
        changes = _walk(s, j, y, raising=False)
        if s.mode == STANDARD:
            for eid, c in changes.items():
                is_out = s.g.edges[eid].tail == j
                assert c >= 0 if is_out else c <= 0, "sign convention broken"
        return changes
    if s.mode == STANDARD:
        return {}
    if s.mode == NAIVE:
        if y < 0:
            return _walk(s, j, y, raising=True)
        return {}
    # enhanced and targeted: settle at one below the target
    if y < -1:
        return _walk(s, j, y + 1, raising=True)
    return {}


def exchange_and_apply(s: CapState, proposals: list[dict[int, int]]) -> None:
    """Sum both endpoints' changes onto each edge and clamp to bounds.

    For the standard mode the clamp provably never binds; the counter
    records if it ever does.
    """
    delta = [0] * s.g.m
    for prop in proposals:
        for eid, c in prop.items():
            delta[eid] += c
    for eid, d in enumerate(delta):
        if d == 0:
            continue
        raw = s.weights[eid] + d
        clamped = min(max(raw, s.lo[eid]), s.hi[eid])
        if clamped != raw:
            s.clamp_engaged += 1
        s.weights[eid] = clamped
    s.round += 1
    s.check_bounds()


def step_cap(s: CapState) -> None:
    x = imbalances(s.g, s.weights)
    proposals = [propose_changes(s, j, x[j]) for j in range(s.g.n)]
    exchange_and_apply(s, proposals)


def run_cap(
    g: Digraph,
    b: CapacityBounds,
    mode: str = STANDARD,
    ordering_seed: int = 0,
    max_rounds: int = 10_000,
    orders: list[list[tuple[int, bool]]] | None = None,
    initial_weights: list[int] | None = None,
    targets: list[int] | None = None,
    record_x: bool = False,
    record_weights: bool = False,
) -> CapResult:
    """Iterate until every node sits exactly at its target imbalance, or
    the round budget runs out (legitimate for infeasible instances)."""
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("balancing needs strong connectivity")
    s = init_cap(g, b, ordering_seed, orders, initial_weights, targets, mode)
    trace = []
    x_trace = []
    w_trace = []
    converged = False
    while True:
        x = imbalances(s.g, s.weights)
        trace.append(sum(abs(v) for v in x))
        if record_x:
            x_trace.append(x)
        if record_weights:
            w_trace.append(list(s.weights))
        if all(x[j] == s.targets[j] for j in range(s.g.n)):
            converged = True
            break
        if s.round >= max_rounds:
            break
        proposals = [propose_changes(s, j, x[j]) for j in range(s.g.n)]
        exchange_and_apply(s, proposals)
    return CapResult(
        final_weights=list(s.weights),
        rounds=s.round,
        converged=converged,
        trace=trace,
        x_trace=x_trace,
        weight_trace=w_trace,
        clamp_engaged=s.clamp_engaged,
    )
