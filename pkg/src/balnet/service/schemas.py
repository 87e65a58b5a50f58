"""Pydantic request/response models for the balancing service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class GraphModel(BaseModel):
    n: int
    edges: list[tuple[int, int]]


class GenerateRequest(BaseModel):
    n: int = Field(ge=2)
    p: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int = 0


class FeasibleRequest(BaseModel):
    graph: GraphModel
    bounds: list[tuple[int, int, float, float]]
    brute_force: bool = False


class FeasibleResponse(BaseModel):
    feasible: bool
    subset: list[int] | None = None
    cut_in_edges: list[tuple[int, int]] = []
    cut_out_edges: list[tuple[int, int]] = []
    bad_edge: tuple[int, int] | None = None
    witness: dict | None = None  # balanced in-bounds assignment when feasible


class RunRequest(BaseModel):
    config: dict


class RunSummaryModel(BaseModel):
    seed: int
    converged: bool
    rounds: int
    final_epsilon: int
    weights_digest: str
    messages_sent: int


class RunResponse(BaseModel):
    summaries: list[RunSummaryModel]
    traces: dict[str, str]
    warnings: list[str] = []
    mean_epsilon_per_round: list[float] = []


class ReplayRequest(BaseModel):
    trace_csv: str
    monotone: bool = False


class ReplayResponse(BaseModel):
    ok: bool
    violations: list[str] = []
