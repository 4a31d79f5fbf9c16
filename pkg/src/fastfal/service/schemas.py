"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SyntheticRequest(BaseModel):
    classes: int = Field(ge=2)
    per_class: int = Field(ge=1)
    dim: int = Field(ge=1)
    sigma: float = Field(ge=0.0)
    seed: int = Field(ge=0)
    out: str


class StoreInfo(BaseModel):
    path: str
    n: int
    d: int
    c: int
    class_histogram: list[int]


class InspectRequest(BaseModel):
    path: str


class RunRequest(BaseModel):
    config_text: str
    out_dir: str | None = None


class RunSummary(BaseModel):
    final_acc: float
    total_mb: float
    walltime_s: float
    rounds: int
    budget_consumed: int
    weak_acc_before: float | None = None
    weak_acc_after: float | None = None


class RunStatus(BaseModel):
    run_id: str
    state: str  # "running" | "done" | "error"
    error: str | None = None
    summary: RunSummary | None = None


class SweepRequest(BaseModel):
    config_text: str
    param: str
    values: list[str]
    out_dir: str


class SweepPoint(BaseModel):
    value: str
    final_acc: float
    total_mb: float
    rounds: int
    budget_consumed: int
