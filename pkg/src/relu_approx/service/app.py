"""FastAPI application exposing the builders, conversions and the harness."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ParameterError
from . import handlers
from .models import (
    AnalyzeRequest,
    AnalyzeResponse,
    BuildResponse,
    ConvertRequest,
    ConvertResponse,
    HealthResponse,
    LipschitzRequest,
    MultiplyRequest,
    ScalingRequest,
    ScalingResponse,
    SobolevRequest,
    SquareRequest,
)

SERVICE_VERSION = "0.1.0"

app = FastAPI(
    title="relu-approx",
    description="Constructive deep-ReLU approximation: builders with measured "
    "error/complexity reports, activation conversions and scaling experiments.",
    version=SERVICE_VERSION,
)


@app.exception_handler(ParameterError)
async def parameter_error_handler(request: Request, exc: ParameterError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", service="relu-approx", version=SERVICE_VERSION)


@app.post("/build/square", response_model=BuildResponse)
def build_square_route(req: SquareRequest) -> BuildResponse:
    return handlers.handle_square(req)


@app.post("/build/multiplier", response_model=BuildResponse)
def build_multiplier_route(req: MultiplyRequest) -> BuildResponse:
    return handlers.handle_multiply(req)


@app.post("/build/sobolev", response_model=BuildResponse)
def build_sobolev_route(req: SobolevRequest) -> BuildResponse:
    return handlers.handle_sobolev(req)


@app.post("/build/lipschitz", response_model=BuildResponse)
def build_lipschitz_route(req: LipschitzRequest) -> BuildResponse:
    return handlers.handle_lipschitz(req)


@app.post("/convert", response_model=ConvertResponse)
def convert_route(req: ConvertRequest) -> ConvertResponse:
    return handlers.handle_convert(req)


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze_route(req: AnalyzeRequest) -> AnalyzeResponse:
    return handlers.handle_analyze(req)


@app.post("/scaling", response_model=ScalingResponse)
def scaling_route(req: ScalingRequest) -> ScalingResponse:
    return handlers.handle_scaling(req)
