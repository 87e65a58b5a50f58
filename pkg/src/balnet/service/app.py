"""HTTP facade over the balancing library.

Stateless compute endpoints: every response is fully determined by the
request payload, so multiple clients can share one server and replays
are byte-stable.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..digraph import GraphError, graph_from_json_dict, graph_to_json_dict, random_strongly_connected
from ..feasibility import (
    bounds_from_json_dict,
    check_circulation_bruteforce,
    check_circulation_flow,
    find_balanced_weights_oracle,
)
from ..harness import ConfigError, ExperimentConfig, replay_check, run_experiment
from .schemas import (
    FeasibleRequest,
    FeasibleResponse,
    GenerateRequest,
    GraphModel,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunResponse,
    RunSummaryModel,
)

app = FastAPI(title="balnet", description="digraph weight-balancing service")


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/generate", response_model=GraphModel)
def generate(req: GenerateRequest):
    g = random_strongly_connected(req.n, req.p, req.seed)
    return graph_to_json_dict(g)


@app.post("/feasible", response_model=FeasibleResponse)
def feasible(req: FeasibleRequest):
    try:
        g = graph_from_json_dict(req.graph.model_dump())
        b = bounds_from_json_dict({"bounds": [list(x) for x in req.bounds]})
        check = check_circulation_bruteforce if req.brute_force else check_circulation_flow
        verdict = check(g, b)
    except (GraphError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    witness = None
    if verdict.feasible:
        w = find_balanced_weights_oracle(g, b)
        witness = {f"{e.tail},{e.head}": v for e, v in sorted(w.items())}
    return FeasibleResponse(
        feasible=verdict.feasible,
        subset=verdict.violating_subset,
        cut_in_edges=[(e.tail, e.head) for e in verdict.cut_in_edges],
        cut_out_edges=[(e.tail, e.head) for e in verdict.cut_out_edges],
        bad_edge=(verdict.bad_edge.tail, verdict.bad_edge.head) if verdict.bad_edge else None,
        witness=witness,
    )


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest):
    try:
        cfg = ExperimentConfig.from_dict(req.config)
        out = run_experiment(cfg)
    except (ConfigError, GraphError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return RunResponse(
        summaries=[RunSummaryModel(**s.to_dict()) for s in out.summaries],
        traces=out.traces,
        warnings=out.warnings,
        mean_epsilon_per_round=out.mean_epsilon_per_round,
    )


@app.post("/replay", response_model=ReplayResponse)
def replay(req: ReplayRequest):
    violations = replay_check(req.trace_csv, monotone=req.monotone)
    return ReplayResponse(ok=not violations, violations=violations)
