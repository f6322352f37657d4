"""Command-line client.

Every subcommand builds the same request model the HTTP service accepts and
either runs the handler in-process (default) or POSTs it to a running
service instance (``--server``).

Exit codes: 0 ok, 2 precondition violation, 3 measured guarantee violation,
4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import httpx

from .analysis import report_row, rows_to_csv
from .errors import ParameterError
from .service import handlers
from .service.models import (
    AnalyzeRequest,
    AnalyzeResponse,
    BuildResponse,
    ConvertRequest,
    ConvertResponse,
    LipschitzRequest,
    MultiplyRequest,
    ScalingRequest,
    ScalingResponse,
    SobolevRequest,
    SquareRequest,
)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_GUARANTEE = 3
EXIT_IO = 4

_ROUTES = {
    SquareRequest: ("/build/square", handlers.handle_square, BuildResponse),
    MultiplyRequest: ("/build/multiplier", handlers.handle_multiply, BuildResponse),
    SobolevRequest: ("/build/sobolev", handlers.handle_sobolev, BuildResponse),
    LipschitzRequest: ("/build/lipschitz", handlers.handle_lipschitz, BuildResponse),
    ConvertRequest: ("/convert", handlers.handle_convert, ConvertResponse),
    AnalyzeRequest: ("/analyze", handlers.handle_analyze, AnalyzeResponse),
    ScalingRequest: ("/scaling", handlers.handle_scaling, ScalingResponse),
}


def dispatch(req, server: str | None):
    """Run a request locally or against a service instance."""
    path, handler, response_model = _ROUTES[type(req)]
    if not server:
        return handler(req)
    resp = httpx.post(
        server.rstrip("/") + path, json=req.model_dump(mode="json"), timeout=600.0
    )
    if resp.status_code == 422:
        raise ParameterError(str(resp.json().get("detail")))
    resp.raise_for_status()
    return response_model.model_validate(resp.json())


def _write_json(path: str, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh)


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _print_build(resp: BuildResponse) -> None:
    r = resp.report
    m = r.metrics
    print(
        f"{r.builder}: measured error {r.measured_error:.6g} on {r.grid}; "
        f"depth {m.depth}, hidden units {m.hidden_units}, weights {m.weights} "
        f"({r.wall_ms:.1f} ms)"
    )


def _finish_build(resp: BuildResponse, emit: str | None, report_path: str | None,
                  plan_path: str | None = None) -> int:
    _print_build(resp)
    if emit:
        if resp.network is None:
            raise ParameterError("network was not included in the response")
        _write_json(emit, resp.network)
        print(f"network written to {emit}")
    if plan_path and resp.plan is not None:
        _write_json(plan_path, resp.plan)
        print(f"plan written to {plan_path}")
    if report_path:
        with open(report_path, "w") as fh:
            fh.write(rows_to_csv([report_row(resp.report)]))
        print(f"report written to {report_path}")
    if not resp.guarantee_ok:
        print("guarantee violated: measured error exceeds the requested accuracy",
              file=sys.stderr)
        return EXIT_GUARANTEE
    return EXIT_OK


def _cmd_square(args) -> int:
    req = SquareRequest(m=args.m, eps=args.eps,
                        include_network=args.emit is not None)
    return _finish_build(dispatch(req, args.server), args.emit, args.report)


def _cmd_multiply(args) -> int:
    req = MultiplyRequest(bound=args.bound, eps=args.eps, grid=args.grid,
                          include_network=args.emit is not None)
    return _finish_build(dispatch(req, args.server), args.emit, args.report)


def _cmd_sobolev(args) -> int:
    req = SobolevRequest(d=args.d, n=args.n, eps=args.eps, target=args.target,
                         strict=args.strict, include_network=args.emit is not None)
    return _finish_build(dispatch(req, args.server), args.emit, args.report)


def _cmd_lipschitz(args) -> int:
    req = LipschitzRequest(eps=args.eps, target=args.target, delta=args.delta,
                           include_network=args.emit is not None)
    return _finish_build(dispatch(req, args.server), args.emit, args.report,
                         plan_path=args.plan)


def _parse_box(text: str) -> list[list[float]]:
    values = [float(v) for v in text.split(",")]
    if len(values) % 2 != 0:
        raise ParameterError("box needs an even number of values: lo,hi per input")
    return [[values[i], values[i + 1]] for i in range(0, len(values), 2)]


def _cmd_convert(args) -> int:
    if args.to_relu == (args.to_pwl is not None):
        raise ParameterError("specify exactly one of --to-relu and --to-pwl")
    network = _read_json(args.infile)
    if args.to_relu:
        req = ConvertRequest(network=network, to="relu")
    else:
        if args.box is None:
            raise ParameterError("--to-pwl needs --box lo,hi[,lo,hi...]")
        req = ConvertRequest(
            network=network,
            to="pwl",
            activation=_read_json(args.to_pwl),
            box=_parse_box(args.box),
        )
    resp = dispatch(req, args.server)
    print(
        f"converted: units {resp.source_metrics.computation_units} -> "
        f"{resp.metrics.computation_units}, weights {resp.source_metrics.weights} "
        f"-> {resp.metrics.weights}"
    )
    if args.out:
        _write_json(args.out, resp.network)
        print(f"network written to {args.out}")
    else:
        print(json.dumps(resp.network))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    req = AnalyzeRequest(
        network=_read_json(args.infile),
        metrics=args.metrics,
        pieces=args.pieces,
        error_vs=args.error_vs,
        grid=args.grid,
        domain=tuple(float(v) for v in args.domain.split(",")),
    )
    resp = dispatch(req, args.server)
    if resp.validation:
        print("validation problems:")
        for item in resp.validation:
            print(f"  - {item}")
    if resp.metrics is not None:
        print(json.dumps(resp.metrics.model_dump()))
    if resp.pieces is not None:
        p = resp.pieces
        print(f"pieces {p['pieces']} <= bound {p['bound']:g}: {'ok' if p['ok'] else 'VIOLATED'}")
        if not p["ok"]:
            return EXIT_GUARANTEE
    if resp.measured_error is not None:
        print(f"measured error vs {args.error_vs}: {resp.measured_error:.6g}")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    eps_list = [float(v) for v in args.eps_list.split(",") if v]
    req = ScalingRequest(builder=args.builder, eps_list=eps_list, d=args.d,
                         n=args.n, bound=args.bound, target=args.target)
    resp = dispatch(req, args.server)
    with open(args.out, "w") as fh:
        fh.write(resp.csv)
    print(f"{len(resp.rows)} rows written to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relu-approx",
        description="Constructive deep-ReLU approximation toolkit",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("square", help="squaring approximator on [0,1]")
    p.add_argument("--m", type=int, default=None, help="refinement level")
    p.add_argument("--eps", type=float, default=None, help="target accuracy")
    p.add_argument("--emit", default=None, metavar="NET.JSON")
    p.add_argument("--report", default=None, metavar="CSV")
    p.set_defaults(func=_cmd_square)

    p = sub.add_parser("multiply", help="approximate multiplier on a box")
    p.add_argument("--bound", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--emit", default=None, metavar="NET.JSON")
    p.add_argument("--report", default=None, metavar="CSV")
    p.set_defaults(func=_cmd_multiply)

    p = sub.add_parser("sobolev", help="partition-of-unity Taylor approximator")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--target", default="sine",
                   help="zero | linear | sine | poly | bowl")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--emit", default=None, metavar="NET.JSON")
    p.add_argument("--report", default=None, metavar="CSV")
    p.set_defaults(func=_cmd_sobolev)

    p = sub.add_parser("lipschitz", help="adaptive depth-6 approximator")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--target", default="sine2pi",
                   help="minmax | sine2pi | zero | linear | randompwl")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--plan", default=None, metavar="PLAN.JSON")
    p.add_argument("--emit", default=None, metavar="NET.JSON")
    p.add_argument("--report", default=None, metavar="CSV")
    p.set_defaults(func=_cmd_lipschitz)

    p = sub.add_parser("convert", help="activation conversions")
    p.add_argument("--in", dest="infile", required=True, metavar="NET.JSON")
    p.add_argument("--to-relu", action="store_true")
    p.add_argument("--to-pwl", default=None, metavar="ACT.JSON")
    p.add_argument("--box", default=None, help="lo,hi per input, comma separated")
    p.add_argument("--out", default=None, metavar="NET.JSON")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("analyze", help="metrics, pieces, measured error")
    p.add_argument("--in", dest="infile", required=True, metavar="NET.JSON")
    p.add_argument("--metrics", action="store_true", default=True)
    p.add_argument("--pieces", action="store_true")
    p.add_argument("--error-vs", dest="error_vs", default=None)
    p.add_argument("--grid", type=int, default=10_001)
    p.add_argument("--domain", default="0,1")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("scaling", help="epsilon sweep to CSV")
    p.add_argument("--builder", required=True,
                   choices=["square", "multiplier", "sobolev", "adaptive"])
    p.add_argument("--eps-list", dest="eps_list", required=True)
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--bound", type=float, default=3.0)
    p.add_argument("--target", default=None)
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (OSError, json.JSONDecodeError, httpx.HTTPError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
