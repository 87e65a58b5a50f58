"""Integer circulation feasibility for capacity-bounded balancing.

An integer weight assignment with ceil(l) <= f <= floor(u) on every edge
and zero imbalance at every node exists iff (i) ceil(l) <= floor(u) per
edge and (ii) for every proper node subset S, the ceil-lower-bounds of
the edges entering S do not exceed the floor-upper-bounds of the edges
leaving S.  Two independent deciders live here: exhaustive subset
enumeration, and a reduction to max-flow with a super source/sink.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .digraph import Digraph, Edge

_SNAP = 1e-9


class MissingBoundError(ValueError):
    pass


class NonPositiveLowerBoundError(ValueError):
    pass


class TooManyNodesError(ValueError):
    pass


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) <= _SNAP else v


def snap_ceil(v: float) -> int:
    return math.ceil(_snap(v))


def snap_floor(v: float) -> int:
    return math.floor(_snap(v))


@dataclass(frozen=True)
class CapacityBounds:
    """Per-edge real intervals [l, u]; only their ceil/floor images enter
    integer arithmetic, after snapping representation noise."""

    intervals: dict[Edge, tuple[float, float]]

    def validate_for(self, g: Digraph) -> None:
        """Bounds must cover the graph's edge set exactly."""
        for e in g.edges:
            if e not in self.intervals:
                raise MissingBoundError(f"no bounds for edge ({e.tail},{e.head})")
            lo, up = self.intervals[e]
            if lo <= 0:
                raise NonPositiveLowerBoundError(
                    f"lower bound must be positive on ({e.tail},{e.head}), got {lo}"
                )
            if lo > up:
                raise MissingBoundError(
                    f"empty interval on ({e.tail},{e.head}): {lo} > {up}"
                )
        extra = set(self.intervals) - set(g.edges)
        if extra:
            e = sorted(extra)[0]
            raise MissingBoundError(
                f"bounds given for non-edge ({e.tail},{e.head})"
            )

    def int_bounds(self, g: Digraph) -> tuple[list[int], list[int]]:
        """(ceil-lower, floor-upper) in canonical edge order."""
        lo = [snap_ceil(self.intervals[e][0]) for e in g.edges]
        hi = [snap_floor(self.intervals[e][1]) for e in g.edges]
        return lo, hi


@dataclass
class FeasibilityVerdict:
    feasible: bool
    violating_subset: list[int] | None = None
    cut_in_edges: list[Edge] = field(default_factory=list)
    cut_out_edges: list[Edge] = field(default_factory=list)
    bad_edge: Edge | None = None  # edge failing ceil(l) <= floor(u), if any


def check_edge_intervals(g: Digraph, b: CapacityBounds) -> list[tuple[Edge, bool]]:
    b.validate_for(g)
    lo, hi = b.int_bounds(g)
    return [(e, lo[i] <= hi[i]) for i, e in enumerate(g.edges)]


def _cut_edges(g: Digraph, subset: set[int]) -> tuple[list[Edge], list[Edge]]:
    into = [e for e in g.edges if e.head in subset and e.tail not in subset]
    outof = [e for e in g.edges if e.tail in subset and e.head not in subset]
    return into, outof


def subset_violates(g: Digraph, b: CapacityBounds, subset: set[int]) -> bool:
    """Re-evaluate the cut condition for one subset: True if the entering
    lower bounds exceed the leaving upper bounds."""
    lo, hi = b.int_bounds(g)
    into, outof = _cut_edges(g, subset)
    in_low = sum(lo[g.edge_id(e.tail, e.head)] for e in into)
    out_up = sum(hi[g.edge_id(e.tail, e.head)] for e in outof)
    return in_low > out_up


def _edge_verdict(g: Digraph, b: CapacityBounds) -> FeasibilityVerdict | None:
    for e, ok in check_edge_intervals(g, b):
        if not ok:
            return FeasibilityVerdict(feasible=False, bad_edge=e)
    return None


def check_circulation_bruteforce(g: Digraph, b: CapacityBounds) -> FeasibilityVerdict:
    """Try every proper nonempty subset, lowest bitmask first."""
    if g.n > 20:
        raise TooManyNodesError(f"brute force capped at 20 nodes, got {g.n}")
    bad = _edge_verdict(g, b)
    if bad:
        return bad
    lo, hi = b.int_bounds(g)
    for mask in range(1, (1 << g.n) - 1):
        subset = {j for j in range(g.n) if mask >> j & 1}
        in_low = 0
        out_up = 0
        for j in subset:
            for eid in g.in_edge_ids[j]:
                if g.edges[eid].tail not in subset:
                    in_low += lo[eid]
            for eid in g.out_edge_ids[j]:
                if g.edges[eid].head not in subset:
                    out_up += hi[eid]
        if in_low > out_up:
            into, outof = _cut_edges(g, subset)
            return FeasibilityVerdict(
                feasible=False,
                violating_subset=sorted(subset),
                cut_in_edges=into,
                cut_out_edges=outof,
            )
    return FeasibilityVerdict(feasible=True)


class _MaxFlow:
    """Shortest-augmenting-path max-flow.

    Arcs live in a flat list with paired reverse entries, so parallel and
    antiparallel arcs never share residual bookkeeping.
    """

    def __init__(self, n: int):
        self.n = n
        self.to: list[int] = []
        self.cap: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add(self, u: int, v: int, c: int) -> int:
        """Returns the arc id, whose flow is later cap[id^1]."""
        aid = len(self.to)
        self.to.append(v)
        self.cap.append(c)
        self.adj[u].append(aid)
        self.to.append(u)
        self.cap.append(0)
        self.adj[v].append(aid + 1)
        return aid

    def flow_on(self, aid: int) -> int:
        return self.cap[aid ^ 1]

    def _bfs_path(self, s: int, t: int) -> list[int] | None:
        """Arc ids of a shortest augmenting path, or None."""
        parent_arc = [-1] * self.n
        seen = [False] * self.n
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for aid in self.adj[u]:
                v = self.to[aid]
                if self.cap[aid] > 0 and not seen[v]:
                    seen[v] = True
                    parent_arc[v] = aid
                    if v == t:
                        path = []
                        while v != s:
                            aid = parent_arc[v]
                            path.append(aid)
                            v = self.to[aid ^ 1]
                        path.reverse()
                        return path
                    queue.append(v)
        return None

    def run(self, s: int, t: int) -> int:
        total = 0
        while True:
            path = self._bfs_path(s, t)
            if path is None:
                return total
            bottleneck = min(self.cap[aid] for aid in path)
            for aid in path:
                self.cap[aid] -= bottleneck
                self.cap[aid ^ 1] += bottleneck
            total += bottleneck

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for aid in self.adj[u]:
                v = self.to[aid]
                if self.cap[aid] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def _flow_network(
    g: Digraph, lo: list[int], hi: list[int]
) -> tuple[_MaxFlow, list[int], int, int, int]:
    """Lower-bounded circulation to plain max-flow: shift flow by the
    lower bounds and route every node's resulting excess through a super
    source/sink."""
    s, t = g.n, g.n + 1
    mf = _MaxFlow(g.n + 2)
    arc_ids = []
    excess = [0] * g.n
    for i, e in enumerate(g.edges):
        arc_ids.append(mf.add(e.tail, e.head, hi[i] - lo[i]))
        excess[e.head] += lo[i]
        excess[e.tail] -= lo[i]
    need = 0
    for j in range(g.n):
        if excess[j] > 0:
            mf.add(s, j, excess[j])
            need += excess[j]
        elif excess[j] < 0:
            mf.add(j, t, -excess[j])
    return mf, arc_ids, s, t, need


def check_circulation_flow(g: Digraph, b: CapacityBounds) -> FeasibilityVerdict:
    bad = _edge_verdict(g, b)
    if bad:
        return bad
    lo, hi = b.int_bounds(g)
    mf, _, s, t, need = _flow_network(g, lo, hi)
    got = mf.run(s, t)
    if got == need:
        return FeasibilityVerdict(feasible=True)
    # The source side of the min cut violates the subset condition; take
    # whichever of it or its complement re-violates (exactly one does).
    reach = mf.reachable(s) - {s, t}
    for candidate in (reach, set(range(g.n)) - reach):
        if candidate and len(candidate) < g.n and subset_violates(g, b, candidate):
            into, outof = _cut_edges(g, candidate)
            return FeasibilityVerdict(
                feasible=False,
                violating_subset=sorted(candidate),
                cut_in_edges=into,
                cut_out_edges=outof,
            )
    raise AssertionError("infeasible flow without a violating cut side")


def find_balanced_weights_oracle(g: Digraph, b: CapacityBounds) -> dict[Edge, int] | None:
    """A concrete balanced integer assignment within bounds, recovered
    from the saturating flow; None when infeasible."""
    bad = _edge_verdict(g, b)
    if bad:
        return None
    lo, hi = b.int_bounds(g)
    mf, arc_ids, s, t, need = _flow_network(g, lo, hi)
    if mf.run(s, t) != need:
        return None
    return {e: lo[i] + mf.flow_on(arc_ids[i]) for i, e in enumerate(g.edges)}


def bounds_from_json_dict(data: dict) -> CapacityBounds:
    intervals = {}
    for tail, head, lo, up in data["bounds"]:
        intervals[Edge(int(tail), int(head))] = (float(lo), float(up))
    return CapacityBounds(intervals=intervals)


def bounds_to_json_dict(b: CapacityBounds) -> dict:
    items = sorted(b.intervals.items(), key=lambda kv: kv[0])
    return {"bounds": [[e.tail, e.head, lo, up] for e, (lo, up) in items]}
