"""Delay-tolerant distributed balancing with non-decreasing weights.

Each node owns its out-edge weights and broadcasts them; receivers keep
a perceived copy of every in-edge weight, updated with a max rule (the
true values only ever grow, so the newest value is the largest).  A node
whose perceived imbalance is positive reallocates its total perceived
in-weight evenly across its out-edges.  Because perceived values never
exceed true ones, the final balanced weights are identical no matter how
delays or drops land.

Variants:
* ``always``: every node retransmits all its out-weights every round.
* ``event``: a node that saw no perceived value change in a round stays
  completely silent (assumes reliable links; a dropped message would
  never be retransmitted).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .digraph import Digraph, imbalances, is_strongly_connected, total_imbalance_list
from .netsim import KIND_WEIGHT, Channel, Fabric, Message
from .ordering import seeded_out_orderings
from .sync_balancer import DivergedError, NotStronglyConnectedError

ALWAYS = "always"
EVENT = "event"


class ZeroOutDegreeError(ValueError):
    pass


class WrongKindError(ValueError):
    pass


def allocate_weights(in_sum: int, out_degree: int, priority: list[int]) -> list[int]:
    """Split ``in_sum`` into ``out_degree`` integers with pairwise
    difference at most 1, summing exactly to ``in_sum``; the slots ranked
    first in ``priority`` take the extra units.

    ``priority[r]`` is the slot index holding rank r.  Monotone: raising
    in_sum never lowers any slot's share.
    """
    if out_degree < 1:
        raise ZeroOutDegreeError("cannot allocate over zero out-edges")
    if len(priority) != out_degree or sorted(priority) != list(range(out_degree)):
        raise ValueError("priority must be a permutation of the slots")
    base, rem = divmod(in_sum, out_degree)
    weights = [base] * out_degree
    for rank in range(rem):
        weights[priority[rank]] += 1
    return weights


@dataclass
class DelayState:
    g: Digraph
    weights: list[int]  # true out-edge values, written only by each tail
    perceived: list[int]  # per edge, the head's possibly stale copy
    priorities: list[list[int]]  # per node: out-edge ids, highest rank first
    fabric: Fabric
    variant: str = ALWAYS
    round: int = 0
    messages_sent: int = 0

    def delayed_imbalance(self, j: int) -> int:
        in_sum = sum(self.perceived[e] for e in self.g.in_edge_ids[j])
        out_sum = sum(self.weights[e] for e in self.g.out_edge_ids[j])
        return in_sum - out_sum

    def eps_delayed(self) -> int:
        return sum(abs(self.delayed_imbalance(j)) for j in range(self.g.n))

    def eps_true(self) -> int:
        return total_imbalance_list(self.g, self.weights)


@dataclass
class DelayResult:
    final_weights: list[int]
    rounds: int | None  # rounds until the true imbalance reached zero
    trace: list[tuple[int, int]]  # (eps_delayed, eps_true) per round
    x_trace: list[list[int]]
    messages_sent: int
    sends_after_convergence: int
    quiescent: bool  # fabric drained, nothing left to say
    converged: bool = True
    # Per-round (weights entering the round, perceived after that round's
    # deliveries): exactly what the round's actions saw.
    weight_snaps: list[list[int]] = field(default_factory=list)
    perceived_snaps: list[list[int]] = field(default_factory=list)


def init_delay(
    g: Digraph,
    fabric: Fabric,
    variant: str = ALWAYS,
    priority_seed: int = 0,
    priorities: list[list[int]] | None = None,
) -> DelayState:
    if variant not in (ALWAYS, EVENT):
        raise ValueError(f"unknown variant {variant!r}")
    if priorities is None:
        priorities = seeded_out_orderings(g, priority_seed)
    return DelayState(
        g=g,
        weights=[1] * g.m,
        perceived=[1] * g.m,
        priorities=priorities,
        fabric=fabric,
        variant=variant,
    )


def receive_updates(
    perceived: dict[int, int], msgs: list[Message], g: Digraph
) -> tuple[dict[int, int], set[int]]:
    """Max-rule merge of arriving weight messages into a perceived map
    keyed by edge id; stale and duplicate values are ignored."""
    out = dict(perceived)
    changed = set()
    for m in msgs:
        if m.kind != KIND_WEIGHT:
            raise WrongKindError(f"expected weight message, got {m.kind}")
        eid = g.edge_id(m.channel.tail, m.channel.head)
        if m.value > out.get(eid, 1):
            out[eid] = m.value
            changed.add(eid)
    return out, changed


def _deliver_phase(s: DelayState) -> set[int]:
    """Apply this round's arrivals; returns the nodes whose perceived
    in-weights actually changed."""
    changed_nodes = set()
    for node, msgs in s.fabric.deliver(s.round).items():
        for m in msgs:
            if m.kind != KIND_WEIGHT:
                raise WrongKindError(f"expected weight message, got {m.kind}")
            eid = s.g.edge_id(m.channel.tail, m.channel.head)
            if m.value > s.perceived[eid]:
                s.perceived[eid] = m.value
                changed_nodes.add(node)
    return changed_nodes


def _act_phase(s: DelayState, changed_nodes: set[int]) -> int:
    """Recompute and retransmit; returns messages sent this round."""
    sent_before = s.messages_sent
    for j in range(s.g.n):
        if s.variant == EVENT and s.round > 0 and j not in changed_nodes:
            continue
        if s.delayed_imbalance(j) > 0:
            order = s.priorities[j]
            in_sum = sum(s.perceived[e] for e in s.g.in_edge_ids[j])
            base, rem = divmod(in_sum, len(order))
            for rank, eid in enumerate(order):
                new_w = base + (1 if rank < rem else 0)
                assert new_w >= s.weights[eid], "out-weights must not decrease"
                s.weights[eid] = new_w
        for eid in s.g.out_edge_ids[j]:
            e = s.g.edges[eid]
            s.fabric.send(Channel(e.tail, e.head), KIND_WEIGHT, s.weights[eid], s.round)
            s.messages_sent += 1
    s.round += 1
    return s.messages_sent - sent_before


def step_delay_round(s: DelayState) -> int:
    """One full round (deliver, recompute, transmit); returns sends."""
    return _act_phase(s, _deliver_phase(s))


def run_delay(
    g: Digraph,
    fabric: Fabric,
    variant: str = ALWAYS,
    priority_seed: int = 0,
    max_rounds: int = 100_000,
    record_trajectory: bool = False,
    priorities: list[list[int]] | None = None,
    strict: bool = True,
) -> DelayResult:
    """Run until the true weights balance; then, for the event variant,
    keep stepping until the fabric drains and the system goes silent.

    The always-transmit variant stops at balance directly: perceived
    values never exceed true ones, so once balanced no node can see a
    positive imbalance again and the weights are final.
    """
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("balancing needs strong connectivity")
    s = init_delay(g, fabric, variant, priority_seed, priorities)
    trace = []
    x_trace = []
    wsnaps, psnaps = [], []
    convergence_round = None
    sends_after = 0
    while True:
        x = imbalances(s.g, s.weights)
        eps_true = sum(abs(v) for v in x)
        if eps_true == 0 and convergence_round is None:
            convergence_round = s.round
        if convergence_round is not None:
            if s.variant == ALWAYS or s.fabric.pending_count() == 0:
                trace.append((s.eps_delayed(), eps_true))
                x_trace.append(x)
                break
        if s.round >= max_rounds:
            if strict:
                raise DivergedError(f"not balanced after {max_rounds} rounds")
            return DelayResult(
                final_weights=list(s.weights), rounds=None, trace=trace,
                x_trace=x_trace, messages_sent=s.messages_sent,
                sends_after_convergence=sends_after, quiescent=False,
                weight_snaps=wsnaps, perceived_snaps=psnaps, converged=False,
            )
        entering_weights = list(s.weights)
        changed = _deliver_phase(s)
        trace.append((s.eps_delayed(), eps_true))
        x_trace.append(x)
        if record_trajectory:
            wsnaps.append(entering_weights)
            psnaps.append(list(s.perceived))
        sent = _act_phase(s, changed)
        if convergence_round is not None:
            sends_after += sent
            assert s.eps_true() == 0, "balance must not break after convergence"
    return DelayResult(
        final_weights=list(s.weights),
        rounds=convergence_round,
        trace=trace,
        x_trace=x_trace,
        messages_sent=s.messages_sent,
        sends_after_convergence=sends_after,
        quiescent=s.fabric.pending_count() == 0,
        weight_snaps=wsnaps,
        perceived_snaps=psnaps,
    )
