"""Request/response schemas shared by the HTTP API and the CLI."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import RunConfig


class AssembleRequest(BaseModel):
    source: str


class AssembleResponse(BaseModel):
    words: list[int]
    listing: str


class DisassembleRequest(BaseModel):
    words: list[int]


class DisassembleResponse(BaseModel):
    source: str


class RunRequest(BaseModel):
    config: RunConfig = Field(default_factory=RunConfig)
    program: list[int] | None = None
    source: str | None = None
    seed: int | None = None
    max_cycles: int | None = None
    include_trace: bool = True


class RunResponse(BaseModel):
    halted: bool
    timed_out: bool
    cycles: int
    mode: str
    seed: int
    branch_count: int
    registers: list[int | None]
    register_expectations: list[float]
    memory_diff: list[dict]
    data_log: list[dict]
    information_bits: float
    predicted_entropy_bits: float
    pruned_mass: float
    trace: list[dict]


class EnsembleRequest(BaseModel):
    config: RunConfig = Field(default_factory=RunConfig)
    program: list[int] | None = None
    source: str | None = None
    n: int | None = None
    seed: int | None = None
    max_cycles: int | None = None
    include_members: bool = False


class EnsembleResponse(BaseModel):
    report: dict
    members_csv: str | None = None


class CompareResponse(BaseModel):
    comparison: dict


class PhysicsRequest(BaseModel):
    config: RunConfig = Field(default_factory=RunConfig)
    sweep: str | None = None


class PhysicsRow(BaseModel):
    param: str
    value: float | None
    a_c_m_per_s2: float
    tau_d_s: float
    lambda_m_per_s: float
    latency_cycles: int | None


class PhysicsResponse(BaseModel):
    rows: list[PhysicsRow]
    warnings: list[str]


class ErrorDetail(BaseModel):
    error: str
    kind: str | None = None
    line: int | None = None
    column: int | None = None
