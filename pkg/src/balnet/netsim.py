"""Deterministic round-based message fabric with delay and drop injection.

Every directed transmission channel (an edge, in its forward or reverse
direction) gets its own pseudorandom substream derived from the fabric
seed, so adding a link never perturbs the draws of another link and a
fixed (seed, send sequence) replays to an identical delivery schedule.

Two delivery conventions exist, fixed per fabric:

* ``min_lag=1`` (default): a message sent during round k is processable
  at the receive phase of round ``k + 1 + delay``.  With delay 0 this
  reproduces the synchronous execution of the weight-broadcast
  protocols, where a node acts on what its neighbors wrote last round.
* ``min_lag=0``: processable at round ``k + delay``; a zero-delay
  message is consumed by the receive phase of its own round.  The
  change-exchange protocols transmit before they receive inside a
  round, so this is causal and makes their zero-delay run coincide
  with the reliable instant-exchange algorithm.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass


class DomainError(ValueError):
    pass


KIND_WEIGHT = "weight"
KIND_CHANGE = "change"
KIND_DESIRED = "desired"


@dataclass(frozen=True, order=True)
class Channel:
    """One direction of one edge: reverse=False is tail->head."""

    tail: int
    head: int
    reverse: bool = False

    @property
    def recipient(self) -> int:
        return self.tail if self.reverse else self.head


@dataclass(frozen=True)
class LinkModel:
    max_delay: int = 0
    drop_prob: float = 0.0

    def __post_init__(self):
        if self.max_delay < 0:
            raise DomainError("max_delay must be >= 0")
        if not (0.0 <= self.drop_prob < 1.0):
            raise DomainError("drop_prob must be in [0, 1)")


@dataclass(frozen=True)
class Message:
    channel: Channel
    kind: str
    value: int
    sent_round: int
    deliver_round: int


class Fabric:
    """Priority queue of in-flight messages keyed by delivery round.

    ``delay_script`` maps (channel, sent_round) to a fixed delay,
    overriding the uniform draw for that one transmission; it is how
    tests replay hand-picked delay schedules.
    """

    def __init__(
        self,
        seed: int,
        default_model: LinkModel = LinkModel(),
        link_models: dict[Channel, LinkModel] | None = None,
        delay_script: dict[tuple[Channel, int], int] | None = None,
        min_lag: int = 1,
    ):
        self.seed = seed
        self.default_model = default_model
        self.link_models = dict(link_models) if link_models else {}
        self.delay_script = dict(delay_script) if delay_script else {}
        self.min_lag = min_lag
        self._pending: list[tuple[int, int, int, Message]] = []
        self._seq = 0
        self._rngs: dict[Channel, random.Random] = {}
        self._last_delivered = -1
        self.sent_count = 0
        self.dropped_count = 0

    def _rng(self, channel: Channel) -> random.Random:
        rng = self._rngs.get(channel)
        if rng is None:
            key = f"{self.seed}:{channel.tail}:{channel.head}:{int(channel.reverse)}"
            rng = random.Random(key)
            self._rngs[channel] = rng
        return rng

    def model_for(self, channel: Channel) -> LinkModel:
        return self.link_models.get(channel, self.default_model)

    def send(self, channel: Channel, kind: str, value: int, sent_round: int) -> bool:
        """Queue one message; returns False if the drop draw consumed it.

        Draw consumption per send is fixed by the link model (one drop
        draw iff drop_prob > 0, one delay draw iff max_delay > 0), so
        replays are stable.
        """
        self.sent_count += 1
        model = self.model_for(channel)
        rng = self._rng(channel)
        if model.drop_prob > 0.0 and rng.random() < model.drop_prob:
            self.dropped_count += 1
            return False
        delay = rng.randint(0, model.max_delay) if model.max_delay > 0 else 0
        scripted = self.delay_script.get((channel, sent_round))
        if scripted is not None:
            delay = scripted
        msg = Message(channel, kind, value, sent_round, sent_round + self.min_lag + delay)
        heapq.heappush(self._pending, (msg.deliver_round, self._seq, msg.sent_round, msg))
        self._seq += 1
        return True

    def transmit_now(self, channel: Channel, value: int) -> int | None:
        """Drop-or-deliver immediately; used by the two-phase handshake
        protocol whose messages never queue."""
        self.sent_count += 1
        model = self.model_for(channel)
        if model.drop_prob > 0.0 and self._rng(channel).random() < model.drop_prob:
            self.dropped_count += 1
            return None
        return value

    def deliver(self, round_: int) -> dict[int, list[Message]]:
        """Pop all messages due at ``round_``, grouped by recipient node.

        Rounds must be queried in nondecreasing order; per recipient the
        messages come out ordered by (sent_round, channel).
        """
        if round_ < self._last_delivered:
            raise ValueError("deliver() rounds must be nondecreasing")
        self._last_delivered = round_
        batch = []
        while self._pending and self._pending[0][0] <= round_:
            batch.append(heapq.heappop(self._pending)[3])
        batch.sort(key=lambda m: (m.sent_round, m.channel))
        out: dict[int, list[Message]] = {}
        for m in batch:
            out.setdefault(m.channel.recipient, []).append(m)
        return out

    def pending_count(self) -> int:
        return len(self._pending)

    def next_deliver_round(self) -> int | None:
        return self._pending[0][0] if self._pending else None


def retransmission_bound(q: float, eps: float) -> int:
    """Smallest k with q**k <= eps: how many consecutive uses a lossy
    link needs before at least one delivery with probability 1-eps."""
    if not (0.0 < q < 1.0):
        raise DomainError("q must be in (0, 1)")
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0, 1)")
    k = max(1, math.ceil(math.log(eps) / math.log(q)))
    while q**k > eps:
        k += 1
    while k > 1 and q ** (k - 1) <= eps:
        k -= 1
    return k
