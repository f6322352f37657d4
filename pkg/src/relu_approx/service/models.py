"""Pydantic request/response models for the HTTP service and the CLI."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

from ..network import ComplexityMetrics
from ..report import ApproxReport


class HealthResponse(BaseModel):
    status: str
    service: str
    version: str


class MetricsModel(BaseModel):
    depth: int
    hidden_units: int
    computation_units: int
    connections: int
    weights: int

    @classmethod
    def from_metrics(cls, m: ComplexityMetrics) -> "MetricsModel":
        return cls(**m.to_dict())


class ReportModel(BaseModel):
    builder: str
    params: dict[str, Any]
    measured_error: float
    grid: str
    metrics: MetricsModel
    wall_ms: float
    extra: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_report(cls, r: ApproxReport) -> "ReportModel":
        return cls(
            builder=r.builder,
            params=r.params,
            measured_error=r.measured_error,
            grid=r.grid,
            metrics=MetricsModel.from_metrics(r.metrics),
            wall_ms=r.wall_ms,
            extra=r.extra,
        )


class SquareRequest(BaseModel):
    m: Optional[int] = None
    eps: Optional[float] = None
    include_network: bool = True


class MultiplyRequest(BaseModel):
    bound: float
    eps: float
    grid: int = 201
    include_network: bool = True


class SobolevRequest(BaseModel):
    d: int
    n: int
    eps: float
    target: str = "sine"
    strict: bool = False
    include_network: bool = False  # stamped networks can be very large


class LipschitzRequest(BaseModel):
    eps: float
    target: str = "sine2pi"
    delta: Optional[float] = None
    include_network: bool = True


class BuildResponse(BaseModel):
    report: ReportModel
    guarantee_ok: bool
    network: Optional[dict[str, Any]] = None
    plan: Optional[dict[str, Any]] = None


class ConvertRequest(BaseModel):
    network: dict[str, Any]
    to: Literal["relu", "pwl"]
    activation: Optional[dict[str, Any]] = None  # PWL carrier, needed for "pwl"
    box: Optional[list[list[float]]] = None      # [lo, hi] per input, needed for "pwl"


class ConvertResponse(BaseModel):
    network: dict[str, Any]
    metrics: MetricsModel
    source_metrics: MetricsModel


class AnalyzeRequest(BaseModel):
    network: dict[str, Any]
    metrics: bool = True
    pieces: bool = False
    error_vs: Optional[str] = None
    grid: int = 10_001
    domain: tuple[float, float] = (0.0, 1.0)


class AnalyzeResponse(BaseModel):
    metrics: Optional[MetricsModel] = None
    pieces: Optional[dict[str, Any]] = None
    measured_error: Optional[float] = None
    validation: list[str] = Field(default_factory=list)


class ScalingRequest(BaseModel):
    builder: Literal["square", "multiplier", "sobolev", "adaptive"]
    eps_list: list[float]
    d: int = 1
    n: int = 2
    bound: float = 3.0
    target: Optional[str] = None


class ScalingResponse(BaseModel):
    rows: list[dict[str, Any]]
    csv: str
