"""Measurement and bound-checking harness.

Grid measurements are certified lower estimates of the true supremum; for
univariate ReLU networks the exact supremum is available through PWL
extraction, and for the squaring family through the exact quadratic-error
routine.  The piece bound (2U)^(L-2) uses the hidden-unit count U and, for
networks over a piecewise-linear activation with p pieces, generalizes to
(pU)^(L-2).
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .arithmetic import build_multiplier, build_square, square_depth_for_error
from .errors import ParameterError, UnsupportedActivationError
from .network import ACT_PWL, ACT_RELU, ACT_RHO, Network, net_extract_pwl
from .pwl import pwl_interpolate, pwl_piece_count, pwl_sup_error_vs_quadratic
from .report import ApproxReport, default_grid, uniform_grid, uniform_grid_1d
from .targets import SmoothFunctionOracle, lipschitz_target, sobolev_oracle

CSV_COLUMNS = [
    "builder", "epsilon", "measured_error", "depth", "hidden_units",
    "computation_units", "connections", "weights", "wall_ms", "extra",
]


def measure_sup_error(net: Network, target, grid) -> float:
    """Max |net(x) - target(x)| over the grid points.

    ``target`` may be vectorized (accepting the whole grid) or scalar.
    Evaluation failures propagate annotated with the offending point.
    """
    pts = np.asarray(grid, dtype=float)
    if pts.size == 0:
        raise ParameterError("empty measurement grid")
    values = net.eval_batch(pts)
    try:
        want = np.asarray(target(pts), dtype=float)
        if want.shape != values.shape:
            raise TypeError
    except Exception:
        rows = pts if pts.ndim == 2 else pts[:, None]
        want = np.empty(values.shape)
        for i, row in enumerate(rows):
            arg = float(row[0]) if rows.shape[1] == 1 else row
            try:
                want[i] = float(target(arg))
            except Exception as exc:
                raise ParameterError(f"target failed at x={arg!r}: {exc}") from exc
    return float(np.max(np.abs(values - want)))


@dataclass(frozen=True)
class PieceBoundResult:
    pieces: int
    bound: float
    ok: bool

    def to_dict(self) -> dict:
        return {"pieces": self.pieces, "bound": self.bound, "ok": self.ok}


def piece_bound_check(net: Network, lo: float = 0.0, hi: float = 1.0) -> PieceBoundResult:
    """Count the linear pieces of a univariate network and compare with the
    depth-L composition bound (t * U)^(L-2)."""
    if net.uses_activation(ACT_RHO):
        raise UnsupportedActivationError("rho networks have no exact piece count")
    act_pieces = 2
    for layer in net.layers[:-1]:
        for act in layer.pwl_acts.values():
            act_pieces = max(act_pieces, pwl_piece_count(act.carrier) + 2)
    f = net_extract_pwl(net, lo, hi)
    pieces = pwl_piece_count(f)
    metrics = net.metrics()
    bound = float(act_pieces * metrics.hidden_units) ** (metrics.depth - 2)
    return PieceBoundResult(pieces=pieces, bound=bound, ok=pieces <= bound)


def shallow_lower_bound(c1: float, L: int, eps: float) -> float:
    """Unit-count lower bound (1/2) (4 eps / c1)^(-1/(2(L-2))) for depth-L
    approximation of a curve with second derivative at least c1 > 0."""
    if c1 <= 0:
        raise ParameterError("c1 must be positive")
    if L < 3:
        raise ParameterError("depth must be at least 3")
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    return 0.5 * (4.0 * eps / c1) ** (-1.0 / (2.0 * (L - 2)))


def min_pieces_for_quadratic_error(eps: float, lo: float = -1.0, hi: float = 1.0,
                                   max_pieces: int = 100_000) -> int:
    """Smallest piece count of a uniform interpolant of x^2 on [lo, hi]
    reaching uniform error eps, found by sweeping with the exact oracle."""
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    for p in range(1, max_pieces + 1):
        grid = np.linspace(lo, hi, p + 1)
        f = pwl_interpolate(lambda t: t * t, grid)
        if pwl_sup_error_vs_quadratic(f, 1.0, 0.0, 0.0) <= eps:
            return p
    raise ParameterError(f"no uniform interpolant within {max_pieces} pieces")


# -- scaling experiments ---------------------------------------------------------


def _run_square(eps: float) -> ApproxReport:
    t0 = time.perf_counter()
    m = square_depth_for_error(eps)
    net = build_square(m)
    err = measure_sup_error(net, lambda x: x * x, uniform_grid_1d())
    return ApproxReport(
        builder="square",
        params={"eps": eps, "m": m},
        measured_error=err,
        grid="uniform, 10001 points on [0,1]",
        metrics=net.metrics(),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"normalized": net.metrics().weights / math.log2(1.0 / eps)},
    )


def _run_multiplier(eps: float, bound: float = 3.0, grid_n: int = 201) -> ApproxReport:
    t0 = time.perf_counter()
    net = build_multiplier(bound, eps)
    pts = uniform_grid(2, grid_n, -bound, bound)
    err = measure_sup_error(net, lambda p: p[:, 0] * p[:, 1], pts)
    return ApproxReport(
        builder="multiplier",
        params={"eps": eps, "bound": bound},
        measured_error=err,
        grid=f"uniform, {grid_n}^2 points on [-{bound},{bound}]^2",
        metrics=net.metrics(),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"normalized": net.metrics().weights / math.log2(1.0 / eps)},
    )


def _run_sobolev(eps: float, oracle: SmoothFunctionOracle) -> ApproxReport:
    from .sobolev import build_sobolev_approximator

    _, _, report = build_sobolev_approximator(oracle, eps)
    w = report.metrics.weights
    report.extra["normalized"] = (
        w * eps ** (oracle.d / oracle.order) / (math.log(1.0 / eps) + 1.0)
    )
    return report

def _run_adaptive(eps: float, target) -> ApproxReport:
    from .lipschitz import build_adaptive_relu

    _, _, report = build_adaptive_relu(target, eps)
    u = report.metrics.hidden_units
    report.extra["normalized"] = u * eps * math.log(1.0 / eps)
    return report


def scaling_experiment(builder: str, eps_list, *, d: int = 1, n: int = 2,
                       bound: float = 3.0, target: str | None = None) -> list[dict]:
    """One report row per epsilon; failures are recorded and the run goes on."""
    rows: list[dict] = []
    for eps in eps_list:
        try:
            if builder == "square":
                report = _run_square(float(eps))
            elif builder == "multiplier":
                report = _run_multiplier(float(eps), bound=bound)
            elif builder == "sobolev":
                oracle = sobolev_oracle(target or "sine", d, n)
                report = _run_sobolev(float(eps), oracle)
            elif builder == "adaptive":
                f = lipschitz_target(target or "sine2pi")
                report = _run_adaptive(float(eps), f)
            else:
                raise ParameterError(f"unknown builder {builder!r}")
            rows.append(report_row(report))
        except ParameterError:
            raise
        except Exception as exc:  # row failure: record, continue
            rows.append(
                {
                    "builder": builder,
                    "epsilon": float(eps),
                    "measured_error": float("nan"),
                    "depth": "",
                    "hidden_units": "",
                    "computation_units": "",
                    "connections": "",
                    "weights": "",
                    "wall_ms": "",
                    "extra": json.dumps({"error": str(exc)}),
                }
            )
    return rows


def report_row(report: ApproxReport) -> dict:
    """Flatten a report into the fixed CSV schema."""
    m = report.metrics
    extra = dict(report.params)
    extra.update(report.extra)
    extra.pop("eps", None)
    return {
        "builder": report.builder,
        "epsilon": report.params.get("eps", report.params.get("epsilon", "")),
        "measured_error": report.measured_error,
        "depth": m.depth,
        "hidden_units": m.hidden_units,
        "computation_units": m.computation_units,
        "connections": m.connections,
        "weights": m.weights,
        "wall_ms": round(report.wall_ms, 3),
        "extra": json.dumps(extra, default=str),
    }


def rows_to_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()
