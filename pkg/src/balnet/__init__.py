"""Distributed integer weight balancing on directed graphs.

Simulators for a family of round-based balancing protocols (centralized,
synchronous, delay-tolerant, capacity-constrained, and unreliable-link
variants), an integer-circulation feasibility checker, a deterministic
message fabric for delay/drop injection, and an experiment harness
exposed over HTTP and a CLI.
"""

from .digraph import (
    Digraph,
    Edge,
    build_digraph,
    is_strongly_connected,
    node_imbalance,
    random_strongly_connected,
    total_imbalance,
)
from .feasibility import (
    CapacityBounds,
    FeasibilityVerdict,
    check_circulation_bruteforce,
    check_circulation_flow,
    find_balanced_weights_oracle,
)

__all__ = [
    "Digraph",
    "Edge",
    "build_digraph",
    "is_strongly_connected",
    "node_imbalance",
    "random_strongly_connected",
    "total_imbalance",
    "CapacityBounds",
    "FeasibilityVerdict",
    "check_circulation_bruteforce",
    "check_circulation_flow",
    "find_balanced_weights_oracle",
]
