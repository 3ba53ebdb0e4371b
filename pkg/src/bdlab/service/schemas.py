"""Request and response bodies for the experiment service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    config: str
    out: str | None = None
    plots: bool = False


class SweepRequest(RunRequest):
    jobs: int = Field(default=1, ge=1)


class RegsweepRequest(RunRequest):
    pass


class VerifyRequest(BaseModel):
    config: str | None = None
    jobs: int = Field(default=1, ge=1)
    out: str | None = None


class RunResponse(BaseModel):
    out_dir: str
    manifest: str
    energy: str
    monitor: str
    snapshots: list[str]
    max_boundary_fraction: float


class SweepResponse(BaseModel):
    out_dir: str
    report: str
    shift: str
    members: list[str]
    rows: int
    plots: list[str] = []


class RegsweepResponse(BaseModel):
    out_dir: str
    table: str
    rows: int
    plots: list[str] = []


class CriterionModel(BaseModel):
    index: int
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    results: list[CriterionModel]
    results_path: str | None = None


class ErrorBody(BaseModel):
    error: str
    violations: list[str] = []
