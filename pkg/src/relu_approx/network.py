"""Feedforward network model: evaluation, complexity accounting, combinators.

Layer 0 is the input layer; stored layers are numbered from 1 and hold
computation units.  The last stored layer contains the single linear output
unit.  Edges may come from any strictly earlier layer (cross-layer skips are
allowed).  A unit computes ``act(sum(w_k * src_k) + bias)``.

Complexity conventions: depth counts the input layer (a single-hidden-layer
network has depth 3); the weight count is the number of connections plus the
number of computation units (the output unit included).

Scalar evaluation sums each unit's contributions with ``math.fsum``, so sums
that cancel in exact arithmetic evaluate to exactly zero regardless of edge
order.  Batch evaluation uses chunked numpy accumulation and is meant for
grid measurement at tolerances of 1e-9 and looser.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    ParameterError,
    StructureError,
    UnsupportedActivationError,
)
from .pwl import PWL1D, pwl_constant, pwl_identity, pwl_linear_combine

ACT_RELU = 0
ACT_RHO = 1
ACT_PWL = 2
ACT_LINEAR = 3

_ACT_NAMES = {ACT_RELU: "relu", ACT_RHO: "rho", ACT_PWL: "pwl", ACT_LINEAR: "linear"}


class ContinuousPWLActivation:
    """A continuous piecewise-linear activation, extended linearly beyond
    its carrier interval with the boundary slopes (so it is defined on all
    of R, like any activation function)."""

    __slots__ = ("carrier",)

    def __init__(self, carrier: PWL1D):
        self.carrier = carrier

    @property
    def left_slope(self) -> float:
        return float(self.carrier.slopes()[0])

    @property
    def right_slope(self) -> float:
        return float(self.carrier.slopes()[-1])

    def eval(self, z):
        z_arr = np.asarray(z, dtype=float)
        c = self.carrier
        out = np.interp(z_arr, c.x, c.y)
        out = np.where(z_arr < c.lo, c.y[0] + self.left_slope * (z_arr - c.lo), out)
        out = np.where(z_arr > c.hi, c.y[-1] + self.right_slope * (z_arr - c.hi), out)
        if np.isscalar(z) or z_arr.ndim == 0:
            return float(out)
        return out

    def extended_to(self, lo: float, hi: float) -> PWL1D:
        """Carrier with its domain linearly extended to cover [lo, hi]."""
        c = self.carrier
        xs, ys = list(c.x), list(c.y)
        if lo < c.lo:
            xs.insert(0, lo)
            ys.insert(0, c.y[0] + self.left_slope * (lo - c.lo))
        if hi > c.hi:
            xs.append(hi)
            ys.append(c.y[-1] + self.right_slope * (hi - c.hi))
        return PWL1D(xs, ys)

    def apply_to_pwl(self, pre: PWL1D) -> PWL1D:
        from .pwl import pwl_compose

        vmin, vmax = pre.value_range()
        outer = self.extended_to(min(vmin, self.carrier.lo), max(vmax, self.carrier.hi))
        return pwl_compose(outer, pre)

    def breakpoints_and_jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior points where the slope actually jumps, with the jumps
        ``rho'(a+) - rho'(a-)``.  Carrier endpoints never qualify because the
        extension reuses the boundary slopes."""
        c = self.carrier.simplified()
        s = np.diff(c.y) / np.diff(c.x)
        jumps = s[1:] - s[:-1]
        scale = np.maximum(1.0, np.maximum(np.abs(s[1:]), np.abs(s[:-1])))
        keep = np.abs(jumps) > 1e-12 * scale
        return c.x[1:-1][keep], jumps[keep]

    def to_json_dict(self) -> dict:
        return {"pwl": self.carrier.to_json_dict()}

    @staticmethod
    def from_json_dict(data: dict) -> "ContinuousPWLActivation":
        return ContinuousPWLActivation(PWL1D.from_json_dict(data["pwl"]))


def abs_activation() -> ContinuousPWLActivation:
    return ContinuousPWLActivation(PWL1D([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]))


def relu_as_pwl_activation() -> ContinuousPWLActivation:
    return ContinuousPWLActivation(PWL1D([-1.0, 0.0, 1.0], [0.0, 0.0, 1.0]))


ActivationLike = Union[str, ContinuousPWLActivation, None]


def _act_code(activation: ActivationLike) -> tuple[int, ContinuousPWLActivation | None]:
    if activation == "relu":
        return ACT_RELU, None
    if activation == "rho":
        return ACT_RHO, None
    if activation in (None, "linear"):
        return ACT_LINEAR, None
    if isinstance(activation, ContinuousPWLActivation):
        return ACT_PWL, activation
    raise ParameterError(f"unknown activation {activation!r}")


class Layer:
    """One computation layer stored as flat arrays (CSR edge lists)."""

    __slots__ = ("bias", "act", "edge_ptr", "edge_layer", "edge_unit",
                 "edge_weight", "pwl_acts", "_matmul_ops")

    def __init__(self, bias, act, edge_ptr, edge_layer, edge_unit, edge_weight,
                 pwl_acts=None):
        self.bias = np.asarray(bias, dtype=float)
        self.act = np.asarray(act, dtype=np.int8)
        self.edge_ptr = np.asarray(edge_ptr, dtype=np.int64)
        self.edge_layer = np.asarray(edge_layer, dtype=np.int32)
        self.edge_unit = np.asarray(edge_unit, dtype=np.int32)
        self.edge_weight = np.asarray(edge_weight, dtype=float)
        self.pwl_acts: dict[int, ContinuousPWLActivation] = dict(pwl_acts or {})
        self._matmul_ops = None

    def matmul_ops(self, source_sizes: Sequence[int]):
        """Per-source-layer sparse matrices so a whole layer's pre-activation
        is a handful of CSR products; built lazily, cached."""
        if self._matmul_ops is None:
            from scipy.sparse import csr_matrix

            ops = []
            rows = np.repeat(
                np.arange(self.n_units, dtype=np.int64), np.diff(self.edge_ptr)
            )
            for sl in np.unique(self.edge_layer):
                sel = self.edge_layer == sl
                mat = csr_matrix(
                    (self.edge_weight[sel], (rows[sel], self.edge_unit[sel])),
                    shape=(self.n_units, source_sizes[sl]),
                )
                ops.append((int(sl), mat))
            self._matmul_ops = ops
        return self._matmul_ops

    @property
    def n_units(self) -> int:
        return self.bias.size

    @property
    def n_edges(self) -> int:
        return self.edge_weight.size

    def unit_edges(self, u: int) -> list[tuple[int, int, float]]:
        lo, hi = self.edge_ptr[u], self.edge_ptr[u + 1]
        return [
            (int(self.edge_layer[e]), int(self.edge_unit[e]), float(self.edge_weight[e]))
            for e in range(lo, hi)
        ]


def _layer_from_units(units: list[tuple[list[tuple[int, int, float]], float, int]],
                      pwl_acts: dict[int, ContinuousPWLActivation]) -> Layer:
    bias = [b for _, b, _ in units]
    act = [a for _, _, a in units]
    ptr = [0]
    e_layer: list[int] = []
    e_unit: list[int] = []
    e_w: list[float] = []
    for edges, _, _ in units:
        for sl, su, w in edges:
            e_layer.append(sl)
            e_unit.append(su)
            e_w.append(w)
        ptr.append(len(e_w))
    return Layer(bias, act, ptr, e_layer, e_unit, e_w, pwl_acts)


@dataclass(frozen=True)
class ComplexityMetrics:
    """Size accounting: weights = connections + computation units."""

    depth: int
    hidden_units: int
    computation_units: int
    connections: int
    weights: int

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "hidden_units": self.hidden_units,
            "computation_units": self.computation_units,
            "connections": self.connections,
            "weights": self.weights,
        }


class Network:
    """Immutable feedforward network over ReLU / rho / continuous-PWL units."""

    __slots__ = ("input_dim", "layers")

    def __init__(self, input_dim: int, layers: Sequence[Layer]):
        if input_dim < 1:
            raise ParameterError("input_dim must be positive")
        if not layers:
            raise ParameterError("need at least the output layer")
        self.input_dim = int(input_dim)
        self.layers = tuple(layers)

    # -- basic properties ---------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.layers) + 1

    def layer_sizes(self) -> list[int]:
        return [layer.n_units for layer in self.layers]

    def metrics(self) -> ComplexityMetrics:
        connections = sum(layer.n_edges for layer in self.layers)
        computation_units = sum(layer.n_units for layer in self.layers)
        hidden_units = computation_units - self.layers[-1].n_units
        return ComplexityMetrics(
            depth=self.depth,
            hidden_units=hidden_units,
            computation_units=computation_units,
            connections=connections,
            weights=connections + computation_units,
        )

    def uses_activation(self, code: int) -> bool:
        return any(np.any(layer.act == code) for layer in self.layers)

    # -- scalar evaluation ----------------------------------------------------

    def eval(self, x) -> float:
        return self._eval_scalar(x, trace=False)

    def eval_trace(self, x) -> list[list[float]]:
        """Evaluate and return every unit's output, layer by layer."""
        return self._eval_scalar(x, trace=True)

    def _eval_scalar(self, x, trace: bool):
        if np.isscalar(x):
            xv = [float(x)]
        else:
            xv = [float(v) for v in np.asarray(x, dtype=float).ravel()]
        if len(xv) != self.input_dim:
            raise ParameterError(
                f"expected {self.input_dim} inputs, got {len(xv)}"
            )
        values: list[list[float]] = [xv]
        for li, layer in enumerate(self.layers, start=1):
            out: list[float] = []
            ptr = layer.edge_ptr
            for u in range(layer.n_units):
                terms = []
                for e in range(ptr[u], ptr[u + 1]):
                    sl = layer.edge_layer[e]
                    if sl >= li:
                        raise StructureError(
                            f"edge into layer {li} references layer {sl}"
                        )
                    terms.append(
                        float(layer.edge_weight[e]) * values[sl][layer.edge_unit[e]]
                    )
                terms.append(float(layer.bias[u]))
                z = math.fsum(terms)
                code = layer.act[u]
                if code == ACT_RELU:
                    out.append(z if z > 0.0 else 0.0)
                elif code == ACT_RHO:
                    out.append(z if 0.0 <= z < 1.0 else 0.0)
                elif code == ACT_PWL:
                    out.append(layer.pwl_acts[u].eval(z))
                else:
                    out.append(z)
            values.append(out)
        if trace:
            return values[1:]
        return values[-1][0]

    # -- batch evaluation -----------------------------------------------------

    def eval_batch(self, points) -> np.ndarray:
        """Evaluate on an (n, d) array of points (or (n,) when d = 1)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            if self.input_dim != 1:
                raise ParameterError("1-D point array requires input_dim == 1")
            pts = pts[:, None]
        if pts.shape[1] != self.input_dim:
            raise ParameterError(
                f"expected points of dimension {self.input_dim}, got {pts.shape[1]}"
            )
        n = pts.shape[0]
        total_units = sum(layer.n_units for layer in self.layers)
        chunk = max(64, min(n, 16_000_000 // max(total_units, 1) + 1))
        out = np.empty(n)
        for c0 in range(0, n, chunk):
            c1 = min(n, c0 + chunk)
            out[c0:c1] = self._forward_chunk(pts[c0:c1])
        return out

    def _forward_chunk(self, pts: np.ndarray) -> np.ndarray:
        sizes = [self.input_dim] + self.layer_sizes()
        values: list[np.ndarray] = [pts.T.copy()]
        for layer in self.layers:
            pre = None
            for _sl, mat in layer.matmul_ops(sizes):
                term = mat @ values[_sl]
                pre = term if pre is None else pre + term
            if pre is None:
                pre = np.repeat(layer.bias[:, None], pts.shape[0], axis=1)
            else:
                pre = pre + layer.bias[:, None]
            first = int(layer.act[0])
            if np.all(layer.act == first):
                if first == ACT_RELU:
                    out = np.maximum(pre, 0.0)
                elif first == ACT_RHO:
                    out = np.where((pre >= 0.0) & (pre < 1.0), pre, 0.0)
                elif first == ACT_LINEAR:
                    out = pre
                else:
                    out = np.empty_like(pre)
                    for u, act in layer.pwl_acts.items():
                        out[u] = act.eval(pre[u])
            else:
                out = np.empty_like(pre)
                relu_mask = layer.act == ACT_RELU
                if np.any(relu_mask):
                    out[relu_mask] = np.maximum(pre[relu_mask], 0.0)
                rho_mask = layer.act == ACT_RHO
                if np.any(rho_mask):
                    z = pre[rho_mask]
                    out[rho_mask] = np.where((z >= 0.0) & (z < 1.0), z, 0.0)
                lin_mask = layer.act == ACT_LINEAR
                if np.any(lin_mask):
                    out[lin_mask] = pre[lin_mask]
                for u, act in layer.pwl_acts.items():
                    out[u] = act.eval(pre[u])
            values.append(out)
        return values[-1][0]

    # -- serialization ----------------------------------------------------------

    def to_json_dict(self) -> dict:
        layers_json = []
        for layer in self.layers:
            units = []
            for u in range(layer.n_units):
                code = int(layer.act[u])
                if code == ACT_PWL:
                    act_json: object = layer.pwl_acts[u].to_json_dict()
                else:
                    act_json = _ACT_NAMES[code]
                units.append(
                    {
                        "edges": [[sl, su, w] for sl, su, w in layer.unit_edges(u)],
                        "bias": float(layer.bias[u]),
                        "activation": act_json,
                    }
                )
            layers_json.append(units)
        return {"input_dim": self.input_dim, "layers": layers_json}

    @staticmethod
    def from_json_dict(data: dict) -> "Network":
        layers = []
        for layer_json in data["layers"]:
            units = []
            pwl_acts: dict[int, ContinuousPWLActivation] = {}
            for u, unit_json in enumerate(layer_json):
                act_json = unit_json["activation"]
                if isinstance(act_json, dict):
                    code = ACT_PWL
                    pwl_acts[u] = ContinuousPWLActivation.from_json_dict(act_json)
                else:
                    code = {v: k for k, v in _ACT_NAMES.items()}[act_json]
                edges = [(int(sl), int(su), float(w)) for sl, su, w in unit_json["edges"]]
                units.append((edges, float(unit_json["bias"]), code))
            layers.append(_layer_from_units(units, pwl_acts))
        return Network(int(data["input_dim"]), layers)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json(text: str) -> "Network":
        return Network.from_json_dict(json.loads(text))


# -- building -----------------------------------------------------------------


@dataclass(frozen=True)
class Affine:
    """Affine combination of unit outputs: sum(coeff * unit) + const.

    Terms reference (layer, unit); layer 0 means a network input.
    """

    terms: tuple[tuple[int, int, float], ...] = ()
    const: float = 0.0

    @staticmethod
    def of_unit(layer: int, unit: int, coeff: float = 1.0) -> "Affine":
        return Affine(((layer, unit, coeff),), 0.0)

    @staticmethod
    def of_input(k: int, coeff: float = 1.0) -> "Affine":
        return Affine(((0, k, coeff),), 0.0)

    @staticmethod
    def constant(c: float) -> "Affine":
        return Affine((), c)

    def scaled(self, c: float) -> "Affine":
        return Affine(tuple((l, u, c * w) for l, u, w in self.terms), c * self.const)

    def shifted(self, c: float) -> "Affine":
        return Affine(self.terms, self.const + c)

    def plus(self, other: "Affine") -> "Affine":
        merged: dict[tuple[int, int], float] = {}
        order: list[tuple[int, int]] = []
        for l, u, w in self.terms + other.terms:
            key = (l, u)
            if key not in merged:
                merged[key] = 0.0
                order.append(key)
            merged[key] += w
        terms = tuple((l, u, merged[(l, u)]) for l, u in order)
        return Affine(terms, self.const + other.const)

    def minus(self, other: "Affine") -> "Affine":
        return self.plus(other.scaled(-1.0))

    @staticmethod
    def sum(parts: Iterable["Affine"]) -> "Affine":
        """Single-pass merge; linear in the total number of terms."""
        merged: dict[tuple[int, int], float] = {}
        order: list[tuple[int, int]] = []
        const = 0.0
        for part in parts:
            const += part.const
            for l, u, w in part.terms:
                key = (l, u)
                if key not in merged:
                    merged[key] = 0.0
                    order.append(key)
                merged[key] += w
        return Affine(tuple((l, u, merged[(l, u)]) for l, u in order), const)

    def max_layer(self) -> int:
        return max((l for l, _, _ in self.terms), default=0)


class NetworkBuilder:
    """Accumulates units layer by layer, then freezes into a Network.

    ``add_unit(layer, pre, activation)`` wires the unit so its pre-activation
    equals the given affine expression; it returns an Affine handle for the
    new unit's output.
    """

    def __init__(self, input_dim: int):
        self.input_dim = int(input_dim)
        self._layers: list[list[tuple[list[tuple[int, int, float]], float, int]]] = []
        self._pwl_acts: list[dict[int, ContinuousPWLActivation]] = []
        self._output: tuple[list[tuple[int, int, float]], float] | None = None

    def _ensure_layer(self, layer: int) -> None:
        if layer < 1:
            raise ParameterError("computation layers start at 1")
        while len(self._layers) < layer:
            self._layers.append([])
            self._pwl_acts.append({})

    def n_units_in(self, layer: int) -> int:
        if layer == 0:
            return self.input_dim
        if layer <= len(self._layers):
            return len(self._layers[layer - 1])
        return 0

    def add_unit(self, layer: int, pre: Affine, activation: ActivationLike = "relu") -> Affine:
        if pre.max_layer() >= layer:
            raise StructureError(
                f"unit in layer {layer} cannot read layer {pre.max_layer()}"
            )
        code, pwl = _act_code(activation)
        if code == ACT_LINEAR:
            raise ParameterError("hidden units need a nonlinearity; use set_output")
        self._ensure_layer(layer)
        idx = len(self._layers[layer - 1])
        edges = [(l, u, w) for l, u, w in pre.terms]
        self._layers[layer - 1].append((edges, pre.const, code))
        if pwl is not None:
            self._pwl_acts[layer - 1][idx] = pwl
        return Affine.of_unit(layer, idx)

    def set_output(self, pre: Affine) -> None:
        if self._output is not None:
            raise StructureError("output already set")
        self._output = ([(l, u, w) for l, u, w in pre.terms], pre.const)

    def build(self) -> Network:
        if self._output is None:
            raise StructureError("output not set")
        out_layer_index = len(self._layers) + 1
        edges, bias = self._output
        for l, _, _ in edges:
            if l >= out_layer_index:
                raise StructureError("output cannot read from its own layer")
        layers = [
            _layer_from_units(units, acts)
            for units, acts in zip(self._layers, self._pwl_acts)
        ]
        layers.append(_layer_from_units([(edges, bias, ACT_LINEAR)], {}))
        return Network(self.input_dim, layers)


# -- operations ----------------------------------------------------------------


def net_eval(net: Network, x) -> float:
    return net.eval(x)


def net_metrics(net: Network) -> ComplexityMetrics:
    return net.metrics()


def net_validate(net: Network) -> list[str]:
    """Check every structural invariant; return a list of violations."""
    violations: list[str] = []
    n_layers = len(net.layers)
    out = net.layers[-1]
    if out.n_units != 1:
        violations.append(f"output layer has {out.n_units} units, expected 1")
    for u in range(out.n_units):
        if out.act[u] != ACT_LINEAR:
            violations.append(f"output unit {u} carries an activation")
    sizes = [net.input_dim] + net.layer_sizes()
    for li, layer in enumerate(net.layers, start=1):
        for u in range(layer.n_units):
            if li < n_layers and layer.act[u] == ACT_LINEAR:
                violations.append(f"unit ({li},{u}) in a hidden layer has no activation")
            if layer.act[u] == ACT_PWL and u not in layer.pwl_acts:
                violations.append(f"unit ({li},{u}) missing its pwl activation")
        if not (np.all(np.isfinite(layer.bias)) and np.all(np.isfinite(layer.edge_weight))):
            violations.append(f"layer {li} has non-finite parameters")
        if layer.n_edges:
            bad = layer.edge_layer >= li
            for e in np.nonzero(bad)[0]:
                u = int(np.searchsorted(layer.edge_ptr, e, side="right") - 1)
                violations.append(
                    f"backward edge: unit ({li},{u}) reads layer {int(layer.edge_layer[e])}"
                )
            ok = ~bad
            src_sizes = np.array(
                [sizes[sl] if 0 <= sl < len(sizes) else -1 for sl in layer.edge_layer]
            )
            out_of_range = ok & ((layer.edge_unit < 0) | (layer.edge_unit >= src_sizes))
            for e in np.nonzero(out_of_range)[0]:
                u = int(np.searchsorted(layer.edge_ptr, e, side="right") - 1)
                violations.append(
                    f"edge of unit ({li},{u}) references missing unit "
                    f"({int(layer.edge_layer[e])},{int(layer.edge_unit[e])})"
                )
    # connectivity: every hidden unit must sit on an input-to-output path
    fwd = [np.ones(net.input_dim, dtype=bool)]
    for li, layer in enumerate(net.layers, start=1):
        reach = np.zeros(layer.n_units, dtype=bool)
        for u in range(layer.n_units):
            for sl, su, _ in layer.unit_edges(u):
                if sl < li and 0 <= su < sizes[sl] and fwd[sl][su]:
                    reach[u] = True
                    break
        fwd.append(reach)
    bwd = [np.zeros(s, dtype=bool) for s in sizes]
    bwd[-1][:] = True
    for li in range(n_layers, 0, -1):
        layer = net.layers[li - 1]
        for u in range(layer.n_units):
            if not bwd[li][u]:
                continue
            for sl, su, _ in layer.unit_edges(u):
                if sl < li and 0 <= su < sizes[sl]:
                    bwd[sl][su] = True
    for li in range(1, n_layers):
        dead = ~(fwd[li] & bwd[li])
        for u in np.nonzero(dead)[0]:
            violations.append(f"dead unit ({li},{int(u)}): not on an input-output path")
    return violations


def parallel_combine(nets: Sequence[Network], coeffs: Sequence[float],
                     bias: float = 0.0) -> Network:
    """Network computing ``sum(c_i * net_i(x)) + bias`` exactly.

    Hidden layers are laid side by side (depth = max over inputs); the output
    units are merged into a single linear output.
    """
    if len(nets) != len(coeffs) or not nets:
        raise ParameterError("need matching, nonempty networks and coefficients")
    d = nets[0].input_dim
    for net in nets[1:]:
        if net.input_dim != d:
            raise ParameterError("input dimensions differ")
    n_hidden = max(len(net.layers) - 1 for net in nets)
    # per-net, per-layer unit offsets in the merged hidden layers
    offsets = []
    merged_units: list[list[tuple[list[tuple[int, int, float]], float, int]]] = [
        [] for _ in range(n_hidden)
    ]
    merged_acts: list[dict[int, ContinuousPWLActivation]] = [{} for _ in range(n_hidden)]
    for net in nets:
        offs = np.zeros(n_hidden + 2, dtype=int)
        for li in range(1, len(net.layers)):
            offs[li] = len(merged_units[li - 1])
        offsets.append(offs)
        for li in range(1, len(net.layers)):
            layer = net.layers[li - 1]
            base = len(merged_units[li - 1])
            for u in range(layer.n_units):
                edges = [
                    (sl, su if sl == 0 else su + offsets[-1][sl], w)
                    for sl, su, w in layer.unit_edges(u)
                ]
                merged_units[li - 1].append((edges, float(layer.bias[u]), int(layer.act[u])))
                if u in layer.pwl_acts:
                    merged_acts[li - 1][base + u] = layer.pwl_acts[u]
    out_edges: list[tuple[int, int, float]] = []
    out_bias = float(bias)
    for net, c, offs in zip(nets, coeffs, offsets):
        out = net.layers[-1]
        out_bias += c * float(out.bias[0])
        for sl, su, w in out.unit_edges(0):
            out_edges.append((sl, su if sl == 0 else su + offs[sl], c * w))
    layers = [
        _layer_from_units(units, acts)
        for units, acts in zip(merged_units, merged_acts)
    ]
    layers.append(_layer_from_units([(out_edges, out_bias, ACT_LINEAR)], {}))
    return Network(d, layers)


def net_parallel_sum(a: Network, b: Network, ca: float, cb: float) -> Network:
    """Network computing ``ca * a(x) + cb * b(x)`` exactly."""
    return parallel_combine([a, b], [ca, cb])


def net_affine_precompose(net: Network, A, b) -> Network:
    """Network computing ``net(A x + b)``: input edges are rewired, all
    computation units, activations and the depth stay untouched."""
    A_arr = np.asarray(A, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if A_arr.ndim != 2 or A_arr.shape[0] != net.input_dim or b_arr.shape != (net.input_dim,):
        raise ParameterError(
            f"substitution must map R^q into R^{net.input_dim}: got A {A_arr.shape}, b {b_arr.shape}"
        )
    new_dim = A_arr.shape[1]
    layers = []
    for layer in net.layers:
        units = []
        for u in range(layer.n_units):
            bias = float(layer.bias[u])
            acc: dict[tuple[int, int], float] = {}
            order: list[tuple[int, int]] = []
            for sl, su, w in layer.unit_edges(u):
                if sl == 0:
                    bias += w * float(b_arr[su])
                    for k in range(new_dim):
                        wk = w * float(A_arr[su, k])
                        if wk != 0.0:
                            key = (0, k)
                            if key not in acc:
                                acc[key] = 0.0
                                order.append(key)
                            acc[key] += wk
                else:
                    key = (sl, su)
                    if key not in acc:
                        acc[key] = 0.0
                        order.append(key)
                    acc[key] += w
            edges = [(l, uu, acc[(l, uu)]) for l, uu in order]
            units.append((edges, bias, int(layer.act[u])))
        layers.append(_layer_from_units(units, layer.pwl_acts))
    return Network(new_dim, layers)


def net_extract_pwl(net: Network, lo: float = 0.0, hi: float = 1.0) -> PWL1D:
    """Exact piecewise-linear function computed by a univariate network.

    Propagates PWL values through every unit with the exact algebra; refuses
    the discontinuous rho activation (sampling must be used there).
    """
    if net.input_dim != 1:
        raise ParameterError("extraction needs a single-input network")
    if net.uses_activation(ACT_RHO):
        raise UnsupportedActivationError(
            "rho units are discontinuous; exact extraction is not defined"
        )
    values: list[list[PWL1D]] = [[pwl_identity(lo, hi)]]
    for layer in net.layers:
        row: list[PWL1D] = []
        for u in range(layer.n_units):
            edges = layer.unit_edges(u)
            bias = float(layer.bias[u])
            if edges:
                pre = pwl_linear_combine(
                    [(w, values[sl][su]) for sl, su, w in edges], bias
                )
            else:
                pre = pwl_constant(bias, lo, hi)
            code = layer.act[u]
            if code == ACT_RELU:
                row.append(_pwl_relu(pre))
            elif code == ACT_PWL:
                row.append(layer.pwl_acts[u].apply_to_pwl(pre))
            else:  # linear output
                row.append(pre)
        values.append(row)
    return values[-1][0]


def _pwl_relu(f: PWL1D) -> PWL1D:
    """Exact pointwise max(f, 0): inserts zero crossings, clips values."""
    xs: list[float] = []
    ys: list[float] = []
    fx, fy = f.x, f.y
    for i in range(fx.size - 1):
        x0, x1 = float(fx[i]), float(fx[i + 1])
        y0, y1 = float(fy[i]), float(fy[i + 1])
        xs.append(x0)
        ys.append(max(y0, 0.0))
        if (y0 < 0.0 < y1) or (y1 < 0.0 < y0):
            xc = x0 - y0 * (x1 - x0) / (y1 - y0)
            if x0 < xc < x1:
                xs.append(xc)
                ys.append(0.0)
    xs.append(float(fx[-1]))
    ys.append(max(float(fy[-1]), 0.0))
    return PWL1D(xs, ys).simplified()


def net_envelope_embed(net: Network, m: int) -> Network:
    """Embed a ReLU network with at most ``m`` hidden units into the
    enveloping architecture: m hidden layers of m units each, every
    cross-layer connection present (unused weights zero).

    Original hidden units are placed one per envelope layer, slot 0, in
    topological (layer-major) order, which preserves every precedence.
    """
    hidden_layers = net.layers[:-1]
    for layer in hidden_layers:
        if np.any(layer.act != ACT_RELU):
            raise UnsupportedActivationError("envelope embedding expects a pure ReLU net")
    placement: dict[tuple[int, int], int] = {}
    for li, layer in enumerate(hidden_layers, start=1):
        for u in range(layer.n_units):
            placement[(li, u)] = len(placement)
    n_hidden = len(placement)
    if n_hidden > m:
        raise ParameterError(f"network has {n_hidden} hidden units, envelope only fits {m}")
    d = net.input_dim

    def remap(sl: int, su: int) -> tuple[int, int]:
        if sl == 0:
            return (0, su)
        return (placement[(sl, su)] + 1, 0)

    original: dict[tuple[int, int], dict[tuple[int, int], float]] = {}
    bias_of: dict[tuple[int, int], float] = {}
    for li, layer in enumerate(hidden_layers, start=1):
        for u in range(layer.n_units):
            tgt = (placement[(li, u)] + 1, 0)
            original[tgt] = {}
            bias_of[tgt] = float(layer.bias[u])
            for sl, su, w in layer.unit_edges(u):
                original[tgt][remap(sl, su)] = original[tgt].get(remap(sl, su), 0.0) + w

    layers = []
    for env_layer in range(1, m + 1):
        units = []
        for slot in range(m):
            edges = [(0, k, 0.0) for k in range(d)]
            for sl in range(1, env_layer):
                edges.extend((sl, su, 0.0) for su in range(m))
            weights = original.get((env_layer, slot), {})
            edges = [(sl, su, weights.get((sl, su), 0.0)) for sl, su, _ in edges]
            units.append((edges, bias_of.get((env_layer, slot), 0.0), ACT_RELU))
        layers.append(_layer_from_units(units, {}))

    out = net.layers[-1]
    out_weights: dict[tuple[int, int], float] = {}
    for sl, su, w in out.unit_edges(0):
        key = remap(sl, su)
        out_weights[key] = out_weights.get(key, 0.0) + w
    out_edges = [(0, k, out_weights.get((0, k), 0.0)) for k in range(d)]
    for sl in range(1, m + 1):
        out_edges.extend((sl, su, out_weights.get((sl, su), 0.0)) for su in range(m))
    layers.append(_layer_from_units([(out_edges, float(out.bias[0]), ACT_LINEAR)], {}))
    return Network(d, layers)
