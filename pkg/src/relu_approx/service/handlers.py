"""Request handlers shared by the FastAPI routes and the CLI.

Each handler takes a request model and returns a response model; parameter
problems raise ParameterError (mapped to HTTP 422 / exit code 2), and a
measured error above the requested accuracy is reported through
``guarantee_ok`` rather than an exception.
"""
from __future__ import annotations

import time

import numpy as np

from ..analysis import (
    measure_sup_error,
    piece_bound_check,
    report_row,
    rows_to_csv,
    scaling_experiment,
)
from ..arithmetic import build_multiplier, build_square, square_depth_for_error
from ..convert import pwl_to_relu, relu_to_pwl
from ..errors import ParameterError
from ..lipschitz import build_adaptive_relu
from ..network import (
    ContinuousPWLActivation,
    Network,
    net_metrics,
    net_validate,
)
from ..pwl import PWL1D
from ..report import ApproxReport, uniform_grid, uniform_grid_1d
from ..sobolev import build_sobolev_approximator
from ..targets import analysis_target, lipschitz_target, sobolev_oracle
from .models import (
    AnalyzeRequest,
    AnalyzeResponse,
    BuildResponse,
    ConvertRequest,
    ConvertResponse,
    LipschitzRequest,
    MetricsModel,
    MultiplyRequest,
    ReportModel,
    ScalingRequest,
    ScalingResponse,
    SobolevRequest,
    SquareRequest,
)


def handle_square(req: SquareRequest) -> BuildResponse:
    if (req.m is None) == (req.eps is None):
        raise ParameterError("specify exactly one of m and eps")
    t0 = time.perf_counter()
    m = req.m if req.m is not None else square_depth_for_error(req.eps)
    if m < 1:
        raise ParameterError("m must be >= 1")
    net = build_square(m)
    err = measure_sup_error(net, lambda x: np.asarray(x) ** 2, uniform_grid_1d())
    target_eps = req.eps if req.eps is not None else 2.0 ** (-2 * m - 2)
    report = ApproxReport(
        builder="square",
        params={"eps": target_eps, "m": m},
        measured_error=err,
        grid="uniform, 10001 points on [0,1]",
        metrics=net_metrics(net),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"exact_sup_error": 2.0 ** (-2 * m - 2)},
    )
    return BuildResponse(
        report=ReportModel.from_report(report),
        guarantee_ok=err <= target_eps,
        network=net.to_json_dict() if req.include_network else None,
    )


def handle_multiply(req: MultiplyRequest) -> BuildResponse:
    if req.grid < 2:
        raise ParameterError("grid must have at least 2 points per axis")
    t0 = time.perf_counter()
    net = build_multiplier(req.bound, req.eps)
    pts = uniform_grid(2, req.grid, -req.bound, req.bound)
    err = measure_sup_error(net, lambda p: p[:, 0] * p[:, 1], pts)
    zero_probe = max(
        abs(net.eval([x, 0.0])) + abs(net.eval([0.0, x]))
        for x in np.linspace(-req.bound, req.bound, 21)
    )
    report = ApproxReport(
        builder="multiplier",
        params={"eps": req.eps, "bound": req.bound},
        measured_error=err,
        grid=f"uniform, {req.grid}^2 points on [-{req.bound},{req.bound}]^2",
        metrics=net_metrics(net),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"max_error_on_zero_lines": zero_probe},
    )
    return BuildResponse(
        report=ReportModel.from_report(report),
        guarantee_ok=err <= req.eps,
        network=net.to_json_dict() if req.include_network else None,
    )


def handle_sobolev(req: SobolevRequest) -> BuildResponse:
    oracle = sobolev_oracle(req.target, req.d, req.n)
    net, arch, report = build_sobolev_approximator(oracle, req.eps, strict=req.strict)
    return BuildResponse(
        report=ReportModel.from_report(report),
        guarantee_ok=report.measured_error <= req.eps,
        network=net.to_json_dict() if req.include_network else None,
    )


def handle_lipschitz(req: LipschitzRequest) -> BuildResponse:
    f = lipschitz_target(req.target)
    net, plan, report = build_adaptive_relu(f, req.eps, delta=req.delta)
    return BuildResponse(
        report=ReportModel.from_report(report),
        guarantee_ok=report.measured_error <= req.eps,
        network=net.to_json_dict() if req.include_network else None,
        plan=plan.to_json_dict(),
    )


def _activation_from_json(data: dict) -> ContinuousPWLActivation:
    if "pwl" in data:
        return ContinuousPWLActivation.from_json_dict(data)
    return ContinuousPWLActivation(PWL1D.from_json_dict(data))


def handle_convert(req: ConvertRequest) -> ConvertResponse:
    net = Network.from_json_dict(req.network)
    if req.to == "relu":
        converted = pwl_to_relu(net)
    else:
        if req.activation is None or req.box is None:
            raise ParameterError("conversion to a pwl activation needs activation and box")
        act = _activation_from_json(req.activation)
        converted = relu_to_pwl(net, act, np.asarray(req.box, dtype=float))
    return ConvertResponse(
        network=converted.to_json_dict(),
        metrics=MetricsModel.from_metrics(net_metrics(converted)),
        source_metrics=MetricsModel.from_metrics(net_metrics(net)),
    )


def handle_analyze(req: AnalyzeRequest) -> AnalyzeResponse:
    net = Network.from_json_dict(req.network)
    out = AnalyzeResponse(validation=net_validate(net))
    if req.metrics:
        out.metrics = MetricsModel.from_metrics(net_metrics(net))
    if req.pieces:
        out.pieces = piece_bound_check(net, *req.domain).to_dict()
    if req.error_vs is not None:
        target = analysis_target(req.error_vs, net.input_dim)
        if net.input_dim == 1:
            pts = np.linspace(req.domain[0], req.domain[1], req.grid)
        elif net.input_dim == 2:
            per_axis = max(2, int(round(req.grid ** 0.5)))
            pts = uniform_grid(2, per_axis, req.domain[0], req.domain[1])
        else:
            raise ParameterError("error measurement supports 1 or 2 inputs")
        out.measured_error = measure_sup_error(net, target, pts)
    return out


def handle_scaling(req: ScalingRequest) -> ScalingResponse:
    rows = scaling_experiment(
        req.builder, req.eps_list, d=req.d, n=req.n, bound=req.bound, target=req.target
    )
    return ScalingResponse(rows=rows, csv=rows_to_csv(rows))
