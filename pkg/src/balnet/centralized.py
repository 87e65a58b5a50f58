"""Global-knowledge baseline: route each surplus along a directed path
from the most positive node to the most negative one until balanced.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .digraph import Digraph, imbalances, is_strongly_connected, total_imbalance_list
from .sync_balancer import NotStronglyConnectedError


class IterationBudgetExceededError(RuntimeError):
    pass


@dataclass
class CentralizedResult:
    final_weights: list[int]
    iterations: int
    trace: list[int]
    x_trace: list[list[int]]


def shortest_path(g: Digraph, src: int, dst: int) -> list[int]:
    """BFS shortest path, exploring neighbors in ascending node order so
    ties break deterministically toward lower indices."""
    if src == dst:
        return [src]
    parent = [-1] * g.n
    parent[src] = src
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in sorted(g.out_neighbors[v]):
            if parent[w] == -1:
                parent[w] = v
                if w == dst:
                    path = [dst]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(w)
    raise NotStronglyConnectedError(f"no path from {src} to {dst}")


def run_centralized(g: Digraph, max_iter: int | None = None) -> CentralizedResult:
    """Initialize all weights to 1, then repeatedly add the largest
    positive imbalance onto a path to the most negative node.

    Each iteration balances the chosen positive node and leaves the
    imbalance of intermediate path nodes untouched, so at most
    min(n-1, eps0/2) iterations are ever needed; exceeding that bound
    raises because it indicates a bug, not a hard instance.
    """
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("centralized balancing needs strong connectivity")
    weights = [1] * g.m
    eps0 = total_imbalance_list(g, weights)
    bound = min(g.n - 1, eps0 // 2)
    if max_iter is None:
        max_iter = bound
    trace = [eps0]
    x_trace = [imbalances(g, weights)]
    iterations = 0
    while trace[-1] > 0:
        if iterations >= max_iter:
            raise IterationBudgetExceededError(
                f"still imbalanced after {max_iter} iterations"
            )
        x = x_trace[-1]
        pos = max(range(g.n), key=lambda j: (x[j], -j))
        neg = min(range(g.n), key=lambda j: (x[j], j))
        surplus = x[pos]
        path = shortest_path(g, pos, neg)
        for a, b in zip(path, path[1:]):
            weights[g.edge_id(a, b)] += surplus
        iterations += 1
        x_trace.append(imbalances(g, weights))
        trace.append(sum(abs(v) for v in x_trace[-1]))
    return CentralizedResult(
        final_weights=weights, iterations=iterations, trace=trace, x_trace=x_trace
    )
