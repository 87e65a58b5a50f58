"""Capacity-constrained balancing when messages are delayed or dropped.

The tail of every edge owns its true weight; the head holds a perceived
copy that can lag (never lead: only increases travel tail-to-head, and
the head applies its own decreases immediately).  Three protocols:

* ``change_exchange`` (bounded delays): positive nodes walk the same
  round-robin order as the reliable algorithm but against perceived
  in-weights, transmit the unit-change amounts, and everyone folds in
  whatever change amounts arrive each round.  Receipt happens at the
  bottom of a round, so a zero-delay run coincides with the reliable
  algorithm round for round.
* ``event_triggered``: identical, except a node that received nothing
  does nothing, and arrivals are folded in before proposing.  Receipt
  happens at the top of a round, so it behaves exactly like the
  change-exchange protocol observing every message one round later.
* ``drop_handshake`` (packet drops): per round, each head sends its
  desired weight for each in-edge (its current view when it has nothing
  to ask); the owner combines both desires, commits the new weight, and
  sends it back; either message may be lost and each side falls back to
  what it already believes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .digraph import Digraph, imbalances, is_strongly_connected
from .feasibility import CapacityBounds
from .netsim import KIND_CHANGE, Channel, Fabric, Message
from .capacity_balancer import init_cap
from .sync_balancer import DivergedError, NotStronglyConnectedError

CHANGE_EXCHANGE = "change_exchange"
EVENT_TRIGGERED = "event_triggered"
DROP_HANDSHAKE = "drop_handshake"
PROTOCOLS = (CHANGE_EXCHANGE, EVENT_TRIGGERED, DROP_HANDSHAKE)


class WrongKindError(ValueError):
    pass


def aggregate_delayed_changes(arrivals: list[Message]) -> int:
    """Sum of change amounts landing together on one channel; several
    delayed rounds may pile up, and silence means zero."""
    total = 0
    for m in arrivals:
        if m.kind != KIND_CHANGE:
            raise WrongKindError(f"expected change message, got {m.kind}")
        total += m.value
    return total


@dataclass
class UnreliableState:
    g: Digraph
    lo: list[int]
    hi: list[int]
    weights: list[int]  # true values, owned by each edge's tail
    perceived: list[int]  # the head's view of each edge
    orders: list[list[tuple[int, bool]]]
    cursors: list[int]
    fabric: Fabric
    protocol: str
    round: int = 0
    clamp_engaged: int = 0
    messages_sent: int = 0

    def perceived_imbalance(self, j: int) -> int:
        in_sum = sum(self.perceived[e] for e in self.g.in_edge_ids[j])
        out_sum = sum(self.weights[e] for e in self.g.out_edge_ids[j])
        return in_sum - out_sum

    def eps_perceived(self) -> int:
        return sum(abs(self.perceived_imbalance(j)) for j in range(self.g.n))

    def project(self, eid: int, raw: int) -> int:
        clamped = min(max(raw, self.lo[eid]), self.hi[eid])
        if clamped != raw:
            self.clamp_engaged += 1
        return clamped

    def check_invariants(self) -> None:
        for i in range(self.g.m):
            assert self.lo[i] <= self.weights[i] <= self.hi[i], "true weight off-bounds"
            assert self.lo[i] <= self.perceived[i] <= self.hi[i], "perceived off-bounds"
            assert self.perceived[i] <= self.weights[i], "perceived must lag true"


@dataclass
class UnreliableResult:
    final_weights: list[int]
    final_perceived: list[int]
    rounds: int
    converged: bool
    trace: list[tuple[int, int]]  # (eps_true, eps_perceived) per round
    messages_sent: int
    clamp_engaged: int
    sends_per_round: list[int] = field(default_factory=list)
    x_trace: list[list[int]] = field(default_factory=list)


def init_unreliable(
    g: Digraph,
    b: CapacityBounds,
    fabric: Fabric,
    protocol: str,
    ordering_seed: int = 0,
    orders: list[list[tuple[int, bool]]] | None = None,
) -> UnreliableState:
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    base = init_cap(g, b, ordering_seed, orders)  # shares validation, init, orders
    return UnreliableState(
        g=g, lo=base.lo, hi=base.hi,
        weights=list(base.weights), perceived=list(base.weights),
        orders=base.orders,
        cursors=base.cursors,
        fabric=fabric,
        protocol=protocol,
    )


def _walk_perceived(s: UnreliableState, j: int, x_p: int) -> dict[int, int]:
    """Round-robin unit changes against the node's local view: true
    values on out-edges, perceived values on in-edges."""
    order = s.orders[j]
    d = len(order)
    pending: dict[int, int] = {}
    misses = 0
    remaining = x_p
    while remaining > 0 and misses < d:
        eid, is_out = order[s.cursors[j]]
        applied = False
        if is_out:
            if s.weights[eid] + pending.get(eid, 0) < s.hi[eid]:
                pending[eid] = pending.get(eid, 0) + 1
                remaining -= 1
                applied = True
        else:
            if s.perceived[eid] + pending.get(eid, 0) > s.lo[eid]:
                pending[eid] = pending.get(eid, 0) - 1
                remaining -= 1
                applied = True
        misses = 0 if applied else misses + 1
        s.cursors[j] = (s.cursors[j] + 1) % d
    return {eid: c for eid, c in pending.items() if c != 0}


def _send_changes(s: UnreliableState, j: int, changes: dict[int, int]) -> None:
    for eid in sorted(changes):
        e = s.g.edges[eid]
        reverse = e.head == j  # change on an in-edge travels head -> tail
        s.fabric.send(Channel(e.tail, e.head, reverse), KIND_CHANGE, changes[eid], s.round)
        s.messages_sent += 1


def _split_own(s: UnreliableState, j: int, changes: dict[int, int], true_d, perc_d) -> None:
    for eid, c in changes.items():
        if s.g.edges[eid].tail == j:
            true_d[eid] += c
        else:
            perc_d[eid] += c


def _split_arrivals(s: UnreliableState, arrivals, true_d, perc_d) -> None:
    for _, msgs in sorted(arrivals.items()):
        for m in msgs:
            if m.kind != KIND_CHANGE:
                raise WrongKindError(f"expected change message, got {m.kind}")
            eid = s.g.edge_id(m.channel.tail, m.channel.head)
            if m.channel.reverse:
                true_d[eid] += m.value
            else:
                perc_d[eid] += m.value


def _apply_deltas(s: UnreliableState, true_d, perc_d) -> None:
    for eid in range(s.g.m):
        if true_d[eid]:
            s.weights[eid] = s.project(eid, s.weights[eid] + true_d[eid])
        if perc_d[eid]:
            s.perceived[eid] = s.project(eid, s.perceived[eid] + perc_d[eid])


def step_change_exchange(s: UnreliableState) -> int:
    """Propose on the current view, transmit, then apply own changes plus
    everything that arrived this round, projecting once per edge."""
    sent_before = s.messages_sent
    true_d = [0] * s.g.m
    perc_d = [0] * s.g.m
    for j in range(s.g.n):
        x_p = s.perceived_imbalance(j)
        changes = _walk_perceived(s, j, x_p) if x_p > 0 else {}
        _send_changes(s, j, changes)
        _split_own(s, j, changes, true_d, perc_d)
    _split_arrivals(s, s.fabric.deliver(s.round), true_d, perc_d)
    _apply_deltas(s, true_d, perc_d)
    s.round += 1
    s.check_invariants()
    return s.messages_sent - sent_before


def step_event_triggered(s: UnreliableState) -> int:
    """Fold arrivals first, and only nodes that heard something act."""
    sent_before = s.messages_sent
    if s.round == 0:
        # Bootstrap round: nothing can arrive yet, but everyone proposes
        # and transmits exactly like the change-exchange round 0.
        true_d = [0] * s.g.m
        perc_d = [0] * s.g.m
        for j in range(s.g.n):
            x_p = s.perceived_imbalance(j)
            changes = _walk_perceived(s, j, x_p) if x_p > 0 else {}
            _send_changes(s, j, changes)
            _split_own(s, j, changes, true_d, perc_d)
        _apply_deltas(s, true_d, perc_d)
        s.round += 1
        s.check_invariants()
        return s.messages_sent - sent_before
    arrivals = s.fabric.deliver(s.round)
    true_d = [0] * s.g.m
    perc_d = [0] * s.g.m
    _split_arrivals(s, arrivals, true_d, perc_d)
    _apply_deltas(s, true_d, perc_d)
    own_true = [0] * s.g.m
    own_perc = [0] * s.g.m
    for j in sorted(arrivals.keys()):
        x_p = s.perceived_imbalance(j)
        changes = _walk_perceived(s, j, x_p) if x_p > 0 else {}
        _send_changes(s, j, changes)
        _split_own(s, j, changes, own_true, own_perc)
    _apply_deltas(s, own_true, own_perc)
    s.round += 1
    s.check_invariants()
    return s.messages_sent - sent_before


def step_drop_handshake(s: UnreliableState) -> int:
    """Two message phases inside one round, drop-or-arrive each.

    Phase A: every head tells every owner the weight it wants on the
    edge (its current perceived value when it wants nothing).  The owner
    combines the two desires: new = theirs + mine - current, clamped.
    Phase B: the owner announces the committed weight; a head missing
    the announcement falls back to its own desired value.
    """
    sent_before = s.messages_sent
    desired: list[dict[int, int]] = []
    for j in range(s.g.n):
        x_p = s.perceived_imbalance(j)
        changes = _walk_perceived(s, j, x_p) if x_p > 0 else {}
        want = {}
        for eid in s.g.out_edge_ids[j]:
            want[eid] = s.weights[eid] + changes.get(eid, 0)
        for eid in s.g.in_edge_ids[j]:
            want[eid] = s.perceived[eid] + changes.get(eid, 0)
        desired.append(want)
    new_weights = list(s.weights)
    for eid, e in enumerate(s.g.edges):
        # Phase A: head -> owner.
        s.messages_sent += 1
        got = s.fabric.transmit_now(Channel(e.tail, e.head, reverse=True), desired[e.head][eid])
        head_want = got if got is not None else s.weights[eid]
        new_weights[eid] = s.project(eid, head_want + desired[e.tail][eid] - s.weights[eid])
        # Phase B: owner -> head.
        s.messages_sent += 1
        back = s.fabric.transmit_now(Channel(e.tail, e.head), new_weights[eid])
        s.perceived[eid] = back if back is not None else desired[e.head][eid]
    s.weights = new_weights
    s.round += 1
    s.check_invariants()
    return s.messages_sent - sent_before


_STEPPERS = {
    CHANGE_EXCHANGE: step_change_exchange,
    EVENT_TRIGGERED: step_event_triggered,
    DROP_HANDSHAKE: step_drop_handshake,
}


def run_unreliable(
    g: Digraph,
    b: CapacityBounds,
    protocol: str,
    fabric: Fabric,
    ordering_seed: int = 0,
    max_rounds: int = 100_000,
    orders: list[list[tuple[int, bool]]] | None = None,
    record_x: bool = False,
    stall_rounds: int | None = None,
    strict: bool = True,
) -> UnreliableResult:
    """Run until truly balanced with nothing meaningful left in flight.

    For the delay protocols that means the fabric has drained; for the
    handshake protocol, that every perceived copy agrees with the truth
    (from there the echo exchange is a fixpoint whatever gets dropped).
    ``stall_rounds`` caps the run without raising, for instances known
    to be infeasible.
    """
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("balancing needs strong connectivity")
    s = init_unreliable(g, b, fabric, protocol, ordering_seed, orders)
    step = _STEPPERS[protocol]
    trace = []
    x_trace = []
    sends_per_round = []
    converged = False
    while True:
        x = imbalances(s.g, s.weights)
        eps_true = sum(abs(v) for v in x)
        trace.append((eps_true, s.eps_perceived()))
        if record_x:
            x_trace.append(x)
        if eps_true == 0:
            if protocol == DROP_HANDSHAKE:
                if s.perceived == s.weights:
                    converged = True
                    break
            elif s.fabric.pending_count() == 0:
                converged = True
                break
        if stall_rounds is not None and s.round >= stall_rounds:
            break
        if s.round >= max_rounds:
            if strict:
                raise DivergedError(f"not balanced after {max_rounds} rounds")
            break
        sends_per_round.append(step(s))
    return UnreliableResult(
        final_weights=list(s.weights),
        final_perceived=list(s.perceived),
        rounds=s.round,
        converged=converged,
        trace=trace,
        messages_sent=s.messages_sent,
        clamp_engaged=s.clamp_engaged,
        sends_per_round=sends_per_round,
        x_trace=x_trace,
    )
