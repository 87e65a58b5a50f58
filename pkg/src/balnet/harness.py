"""Experiment runner: config ingestion, seeded batch execution, CSV trace
emission, and trace re-validation.

Every output byte is a pure function of (config, seeds): graphs, bounds,
orderings and link randomness all derive from the per-run seed.
"""
from __future__ import annotations

import hashlib
import io
import json
import random
from dataclasses import dataclass, field

from . import capacity_balancer as capb
from . import capacity_unreliable as capu
from . import delay_balancer as delayb
from .centralized import run_centralized
from .digraph import (
    Digraph,
    Edge,
    graph_from_json_dict,
    imbalances,
    random_strongly_connected,
)
from .feasibility import CapacityBounds, bounds_from_json_dict, check_circulation_flow
from .netsim import Channel, Fabric, LinkModel
from .sync_balancer import init_sync, run_sync, step_async

ALGORITHMS = (
    "centralized",
    "sync",
    "sync-async-script",
    "delay",
    "delay-event",
    "cap",
    "cap-enhanced",
    "cap-naive",
    "cap-targeted",
    "cap-delay",
    "cap-event",
    "cap-drop",
)

_CAP_MODES = {
    "cap": capb.STANDARD,
    "cap-enhanced": capb.ENHANCED,
    "cap-naive": capb.NAIVE,
    "cap-targeted": capb.TARGETED,
}

_UNRELIABLE = {
    "cap-delay": capu.CHANGE_EXCHANGE,
    "cap-event": capu.EVENT_TRIGGERED,
    "cap-drop": capu.DROP_HANDSHAKE,
}


class ConfigError(ValueError):
    pass


class IoError(OSError):
    pass


@dataclass
class ExperimentConfig:
    algorithm: str
    graph: dict | None = None  # inline {"n":..,"edges":[..]}
    graph_file: str | None = None
    generator: dict | None = None  # {"n":..,"p":..,"seed": optional}
    bounds: list | None = None  # inline [[tail,head,l,u],..]
    bounds_file: str | None = None
    bounds_gen: dict | None = None
    link: dict = field(default_factory=dict)  # {"tau_max":..,"drop_prob":..}
    seeds: list[int] = field(default_factory=lambda: [0])
    max_rounds: int | None = None
    init_weight: int | None = None  # sync family
    activations: list[int] | None = None  # sync-async-script
    targets: list[int] | None = None  # cap-targeted
    initial_weights: list | None = None  # [[tail,head,w],..], cap family
    orderings: list | None = None  # sync family: per node out-neighbor lists
    orders: list | None = None  # cap family: per node [[tail,head],..]
    delay_script: list | None = None  # [{"edge":[t,h],"send_round":r,"delay":d}]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")
        if sum(x is not None for x in (cfg.graph, cfg.graph_file, cfg.generator)) != 1:
            raise ConfigError("exactly one of graph, graph_file, generator required")
        if not cfg.seeds:
            raise ConfigError("at least one seed required")
        if cfg.algorithm.startswith("cap") and all(
            x is None for x in (cfg.bounds, cfg.bounds_file, cfg.bounds_gen)
        ):
            raise ConfigError(f"{cfg.algorithm} requires bounds")
        if cfg.algorithm == "cap-targeted":
            if cfg.targets is None or sum(cfg.targets) != 0:
                raise ConfigError("cap-targeted needs targets summing to zero")
        if cfg.algorithm == "sync-async-script" and not cfg.activations:
            raise ConfigError("sync-async-script needs an activations list")
        drop = cfg.link.get("drop_prob", 0.0)
        tau = cfg.link.get("tau_max", 0)
        max_drop = max(drop) if isinstance(drop, (list, tuple)) else drop
        max_tau = max(tau) if isinstance(tau, (list, tuple)) else tau
        if cfg.algorithm in ("cap-delay", "cap-event") and max_drop > 0:
            raise ConfigError(f"{cfg.algorithm} does not support packet drops")
        if cfg.algorithm == "cap-drop" and max_tau > 0:
            raise ConfigError("cap-drop does not support delays")
        return cfg


@dataclass
class RunSummary:
    seed: int
    converged: bool
    rounds: int
    final_epsilon: int
    weights_digest: str
    messages_sent: int

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "converged": self.converged,
            "rounds": self.rounds,
            "final_epsilon": self.final_epsilon,
            "weights_digest": self.weights_digest,
            "messages_sent": self.messages_sent,
        }


def weights_digest(g: Digraph, wlist) -> str:
    """64-bit hash of the canonical (tail, head, weight) list."""
    canon = ";".join(f"{e.tail},{e.head},{w}" for e, w in zip(g.edges, wlist))
    return hashlib.blake2b(canon.encode(), digest_size=8).hexdigest()


def _graph_for_run(cfg: ExperimentConfig, seed: int) -> Digraph:
    if cfg.graph is not None:
        return graph_from_json_dict(cfg.graph)
    if cfg.graph_file is not None:
        try:
            with open(cfg.graph_file) as fh:
                return graph_from_json_dict(json.load(fh))
        except OSError as exc:
            raise IoError(str(exc)) from exc
    gen = cfg.generator
    gseed = gen.get("seed", seed)  # omit the seed to draw a fresh graph per run
    return random_strongly_connected(int(gen["n"]), float(gen.get("p", 0.0)), gseed)


def _bounds_for_run(cfg: ExperimentConfig, g: Digraph, seed: int) -> CapacityBounds | None:
    if cfg.bounds is not None:
        return bounds_from_json_dict({"bounds": cfg.bounds})
    if cfg.bounds_file is not None:
        try:
            with open(cfg.bounds_file) as fh:
                return bounds_from_json_dict(json.load(fh))
        except OSError as exc:
            raise IoError(str(exc)) from exc
    if cfg.bounds_gen is not None:
        return generate_bounds(g, seed, **cfg.bounds_gen)
    return None


def balanced_circulation(g: Digraph) -> list[int]:
    """A balanced all-positive integer assignment: every edge closed into
    a cycle via a shortest return path, all cycles summed."""
    from .centralized import shortest_path

    f = [0] * g.m
    for eid, e in enumerate(g.edges):
        f[eid] += 1
        path = shortest_path(g, e.head, e.tail)
        for a, b in zip(path, path[1:]):
            f[g.edge_id(a, b)] += 1
    return f


def generate_bounds(
    g: Digraph,
    seed: int,
    low_slack: float = 2.0,
    up_slack: float = 3.0,
    ensure_feasible: bool = True,
    low_range: tuple[float, float] = (0.5, 3.0),
    width_range: tuple[float, float] = (0.2, 3.0),
) -> CapacityBounds:
    """Seeded random per-edge intervals.

    Feasible ones are built around a known balanced circulation, so they
    admit a balanced integer assignment by construction; otherwise the
    intervals are drawn blind (and usually end up infeasible on graphs
    with uneven degrees).
    """
    rng = random.Random(f"{seed}:bounds")
    intervals = {}
    if ensure_feasible:
        circ = balanced_circulation(g)
        for eid, e in enumerate(g.edges):
            f = circ[eid]
            lo = f - rng.uniform(0.0, min(low_slack, f - 0.25))
            up = f + rng.uniform(0.0, up_slack)
            intervals[e] = (lo, up)
    else:
        for e in g.edges:
            lo = rng.uniform(*low_range)
            intervals[e] = (lo, lo + rng.uniform(*width_range))
    return CapacityBounds(intervals=intervals)


def generate_infeasible_bounds(g: Digraph, seed: int, max_tries: int = 500) -> CapacityBounds:
    """Blind random intervals rejection-sampled until the circulation
    conditions fail on a subset cut (every single edge stays viable)."""
    for attempt in range(max_tries):
        rng = random.Random(f"{seed}:infeasible:{attempt}")
        intervals = {}
        for e in g.edges:
            lo = rng.uniform(0.5, 3.0)
            intervals[e] = (lo, lo + rng.uniform(0.5, 2.0))
        b = CapacityBounds(intervals=intervals)
        lo_i, hi_i = b.int_bounds(g)
        if any(l > h for l, h in zip(lo_i, hi_i)):
            continue
        verdict = check_circulation_flow(g, b)
        if not verdict.feasible:
            return b
    raise ConfigError(f"no infeasible bounds found in {max_tries} tries")


def _sync_orderings(cfg: ExperimentConfig, g: Digraph) -> list[list[int]] | None:
    """Config orderings are out-neighbor lists per node; the balancer
    wants edge ids."""
    if cfg.orderings is None:
        return None
    return [
        [g.edge_id(j, int(nbr)) for nbr in row] for j, row in enumerate(cfg.orderings)
    ]


def _cap_inputs(cfg: ExperimentConfig, g: Digraph):
    initial = None
    if cfg.initial_weights is not None:
        byedge = {Edge(int(t), int(h)): int(w) for t, h, w in cfg.initial_weights}
        initial = [byedge[e] for e in g.edges]
    orders = None
    if cfg.orders is not None:
        orders = []
        for j, entries in enumerate(cfg.orders):
            row = []
            for t, h in entries:
                eid = g.edge_id(int(t), int(h))
                row.append((eid, g.edges[eid].tail == j))
            orders.append(row)
    return initial, orders


def _fabric_for_run(cfg: ExperimentConfig, g: Digraph, seed: int, min_lag: int) -> Fabric:
    """Link params are scalars or per-edge lists (canonical edge order);
    both directions of an edge share its entry."""
    tau = cfg.link.get("tau_max", 0)
    drop = cfg.link.get("drop_prob", 0.0)
    fabric_seed = int(cfg.link.get("seed", seed))

    def per_edge(value, cast):
        if isinstance(value, (list, tuple)):
            if len(value) != g.m:
                raise ConfigError(f"per-edge link list needs {g.m} entries, got {len(value)}")
            return [cast(v) for v in value]
        return [cast(value)] * g.m

    taus = per_edge(tau, int)
    drops = per_edge(drop, float)
    if all(t == taus[0] for t in taus) and all(q == drops[0] for q in drops):
        return Fabric(
            fabric_seed,
            default_model=LinkModel(taus[0], drops[0]),
            delay_script=_script_for_run(cfg, g),
            min_lag=min_lag,
        )
    models = {}
    for i, e in enumerate(g.edges):
        model = LinkModel(taus[i], drops[i])
        models[Channel(e.tail, e.head)] = model
        models[Channel(e.tail, e.head, reverse=True)] = model
    return Fabric(
        fabric_seed,
        link_models=models,
        delay_script=_script_for_run(cfg, g),
        min_lag=min_lag,
    )


def _script_for_run(cfg: ExperimentConfig, g: Digraph) -> dict | None:
    if cfg.delay_script is None:
        return None
    script = {}
    for entry in cfg.delay_script:
        t, h = entry["edge"]
        ch = Channel(int(t), int(h), bool(entry.get("reverse", False)))
        script[(ch, int(entry["send_round"]))] = int(entry["delay"])
    return script


@dataclass
class TraceRow:
    round: int
    epsilon: int
    epsilon_perceived: int | None
    x: list[int]


def run_one(cfg: ExperimentConfig, seed: int) -> tuple[RunSummary, list[TraceRow], Digraph]:
    g = _graph_for_run(cfg, seed)
    b = _bounds_for_run(cfg, g, seed)
    algo = cfg.algorithm

    if algo == "centralized":
        res = run_centralized(g)
        rows = [TraceRow(k, eps, None, x) for k, (eps, x) in enumerate(zip(res.trace, res.x_trace))]
        return (
            RunSummary(seed, True, res.iterations, res.trace[-1], weights_digest(g, res.final_weights), 0),
            rows,
            g,
        )

    if algo == "sync":
        state = init_sync(
            g, cfg.init_weight or g.n, ordering_seed=seed,
            orderings=_sync_orderings(cfg, g),
        )
        res = run_sync(state, max_rounds=cfg.max_rounds, strict=False)
        rows = [TraceRow(k, eps, None, x) for k, (eps, x) in enumerate(zip(res.trace, res.x_trace))]
        return (
            RunSummary(seed, res.converged, res.rounds, res.trace[-1], weights_digest(g, res.weights), 0),
            rows,
            g,
        )

    if algo == "sync-async-script":
        state = init_sync(
            g, cfg.init_weight or 1, ordering_seed=seed,
            orderings=_sync_orderings(cfg, g),
        )
        rows = []
        for k, active in enumerate([None] + list(cfg.activations)):
            if active is not None:
                state = step_async(state, int(active))
            x = imbalances(g, state.weights)
            rows.append(TraceRow(k, sum(abs(v) for v in x), None, x))
        eps = rows[-1].epsilon
        return (
            RunSummary(seed, eps == 0, len(cfg.activations), eps, weights_digest(g, state.weights), 0),
            rows,
            g,
        )

    if algo in ("delay", "delay-event"):
        fabric = _fabric_for_run(cfg, g, seed, min_lag=1)
        variant = delayb.ALWAYS if algo == "delay" else delayb.EVENT
        res = delayb.run_delay(
            g, fabric, variant, priority_seed=seed,
            max_rounds=cfg.max_rounds or 100_000, strict=False,
        )
        rows = [
            TraceRow(k, eps_true, eps_del, x)
            for k, ((eps_del, eps_true), x) in enumerate(zip(res.trace, res.x_trace))
        ]
        return (
            RunSummary(
                seed, res.converged, res.rounds if res.rounds is not None else len(res.trace),
                rows[-1].epsilon, weights_digest(g, res.final_weights), res.messages_sent,
            ),
            rows,
            g,
        )

    if algo in _CAP_MODES:
        initial, orders = _cap_inputs(cfg, g)
        res = capb.run_cap(
            g, b, mode=_CAP_MODES[algo], ordering_seed=seed,
            max_rounds=cfg.max_rounds or 10_000,
            orders=orders, initial_weights=initial, targets=cfg.targets,
            record_x=True,
        )
        rows = [TraceRow(k, eps, None, x) for k, (eps, x) in enumerate(zip(res.trace, res.x_trace))]
        return (
            RunSummary(seed, res.converged, res.rounds, res.trace[-1], weights_digest(g, res.final_weights), 0),
            rows,
            g,
        )

    if algo in _UNRELIABLE:
        protocol = _UNRELIABLE[algo]
        min_lag = 1 if protocol == capu.EVENT_TRIGGERED else 0
        fabric = _fabric_for_run(cfg, g, seed, min_lag=min_lag)
        _, orders = _cap_inputs(cfg, g)
        res = capu.run_unreliable(
            g, b, protocol, fabric, ordering_seed=seed,
            max_rounds=cfg.max_rounds or 100_000, orders=orders,
            record_x=True, strict=False,
        )
        rows = [
            TraceRow(k, eps_true, eps_perc, x)
            for k, ((eps_true, eps_perc), x) in enumerate(zip(res.trace, res.x_trace))
        ]
        return (
            RunSummary(seed, res.converged, res.rounds, rows[-1].epsilon, weights_digest(g, res.final_weights), res.messages_sent),
            rows,
            g,
        )

    raise ConfigError(f"unknown algorithm {algo!r}")


def emit_trace(rows: list[TraceRow], n: int) -> str:
    """CSV with one row per round: total imbalance, its perceived variant
    when the algorithm has one, and every node's imbalance."""
    buf = io.StringIO()
    header = ["round", "epsilon", "epsilon_perceived"] + [f"x_{j}" for j in range(n)]
    buf.write(",".join(header) + "\n")
    for r in rows:
        perc = "" if r.epsilon_perceived is None else str(r.epsilon_perceived)
        buf.write(",".join([str(r.round), str(r.epsilon), perc] + [str(v) for v in r.x]) + "\n")
    return buf.getvalue()


@dataclass
class ExperimentOutput:
    summaries: list[RunSummary]
    traces: dict[str, str]  # filename -> csv text
    warnings: list[str]
    mean_epsilon_per_round: list[float]


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutput:
    """One run per seed; deterministic; traces keyed by seed."""
    summaries = []
    traces = {}
    warnings = []
    eps_curves = []
    for seed in cfg.seeds:
        if cfg.algorithm.startswith("cap"):
            g = _graph_for_run(cfg, seed)
            b = _bounds_for_run(cfg, g, seed)
            if b is not None and not check_circulation_flow(g, b).feasible:
                warnings.append(f"seed {seed}: circulation conditions fail; run kept")
        summary, rows, g = run_one(cfg, seed)
        summaries.append(summary)
        traces[f"trace_seed{seed}.csv"] = emit_trace(rows, g.n)
        eps_curves.append([r.epsilon for r in rows])
    longest = max(len(c) for c in eps_curves)
    mean_curve = []
    for k in range(longest):
        # Converged runs hold their final value in the average.
        vals = [c[k] if k < len(c) else c[-1] for c in eps_curves]
        mean_curve.append(sum(vals) / len(vals))
    return ExperimentOutput(summaries, traces, warnings, mean_curve)


def replay_check(csv_text: str, monotone: bool = False) -> list[str]:
    """Re-validate a trace file: per-row conservation, parity and
    consistency, plus optional monotone total imbalance (guaranteed for
    the synchronous, standard-capacity and unreliable-capacity runs)."""
    violations = []
    lines = csv_text.strip().splitlines()
    if not lines:
        return ["empty trace"]
    header = lines[0].split(",")
    if header[:3] != ["round", "epsilon", "epsilon_perceived"]:
        return [f"bad header: {lines[0]!r}"]
    prev_eps = None
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        eps = int(parts[1])
        x = [int(v) for v in parts[3:]]
        if eps < 0:
            violations.append(f"line {ln}: negative epsilon")
        if eps % 2 != 0:
            violations.append(f"line {ln}: odd epsilon {eps}")
        if sum(x) != 0:
            violations.append(f"line {ln}: node imbalances sum to {sum(x)}, not 0")
        if sum(abs(v) for v in x) != eps:
            violations.append(f"line {ln}: epsilon {eps} != sum of |x| {sum(abs(v) for v in x)}")
        if monotone and prev_eps is not None and eps > prev_eps:
            violations.append(f"line {ln}: epsilon rose {prev_eps} -> {eps}")
        prev_eps = eps
    return violations
