"""Rewrites between ReLU networks and networks over other continuous
piecewise-linear activations.

Both directions replace units in place, so the depth never changes.

To ReLU: a unit with activation rho having breakpoints a_1 < ... < a_M is
expanded with the identity

    rho(z) = c_0 relu(a_1 - z) + sum_m c_m relu(z - a_m) + h,
    c_0 = -rho'(a_1-),  c_1 = rho'(a_1+),  c_m = rho'(a_m+) - rho'(a_m-) (m >= 2),
    h = rho(a_1),

which is probe-verified against the activation before use.  Units whose
coefficient is exactly zero are not emitted.

From ReLU: on a bounded input box, relu(z) for z in [-r, r] equals

    (rho(a + t z) - rho(a - r0/2 + t z) - rho(a) + rho(a - r0/2)) / (jump * t),
    t = r0 / (2 r),

where a is a breakpoint of rho, r0 the gap to its nearest other breakpoint,
and jump = rho'(a+) - rho'(a-).  The per-unit radius r is a certified
interval-arithmetic bound of the pre-activation over the box, widened by 25
percent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedActivationError
from .network import (
    ACT_LINEAR,
    ACT_PWL,
    ACT_RELU,
    ACT_RHO,
    ContinuousPWLActivation,
    Layer,
    Network,
    _layer_from_units,
)


@dataclass(frozen=True)
class BreakpointData:
    """Breakpoint geometry of a continuous piecewise-linear activation."""

    points: np.ndarray        # a_1 < ... < a_M
    values: np.ndarray        # rho(a_m)
    left_slopes: np.ndarray   # rho'(a_m -)
    right_slopes: np.ndarray  # rho'(a_m +)
    separations: np.ndarray   # distance to the nearest other breakpoint

    @property
    def count(self) -> int:
        return int(self.points.size)

    @property
    def jumps(self) -> np.ndarray:
        return self.right_slopes - self.left_slopes

    @staticmethod
    def of(act: ContinuousPWLActivation) -> "BreakpointData":
        carrier = act.carrier.simplified()
        slopes = np.diff(carrier.y) / np.diff(carrier.x)
        jumps = slopes[1:] - slopes[:-1]
        scale = np.maximum(1.0, np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1])))
        keep = np.abs(jumps) > 1e-12 * scale
        points = carrier.x[1:-1][keep]
        if points.size == 0:
            raise ParameterError(
                "activation is affine (no breakpoints); fold it into the weights"
            )
        values = carrier.y[1:-1][keep]
        left = slopes[:-1][keep]
        right = slopes[1:][keep]
        if points.size == 1:
            seps = np.array([1.0])
        else:
            gaps = np.diff(points)
            seps = np.minimum(
                np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]])
            )
        return BreakpointData(points, values, left, right, seps)


def _relu_coefficients(act: ContinuousPWLActivation) -> tuple[BreakpointData, np.ndarray, float, float]:
    """(data, c_1..c_M, c_0, h) of the ReLU expansion, probe-verified."""
    data = BreakpointData.of(act)
    c = data.jumps.copy()
    c[0] = data.right_slopes[0]
    c0 = -float(data.left_slopes[0])
    h = float(data.values[0])
    a = data.points
    probes = [float(a[0]) - 1.0, float(a[-1]) + 1.0]
    probes += [0.5 * float(a[i] + a[i + 1]) for i in range(a.size - 1)]
    probes += [float(v) for v in a]
    for z in probes:
        expanded = c0 * max(a[0] - z, 0.0) + h
        expanded += float(np.sum(c * np.maximum(z - a, 0.0)))
        direct = act.eval(z)
        if abs(expanded - direct) > 1e-9 * (1.0 + abs(direct)):
            raise ParameterError(
                f"ReLU expansion disagrees with the activation at z={z}: "
                f"{expanded} vs {direct}"
            )
    return data, c, c0, h


def pwl_to_relu(net: Network) -> Network:
    """Equivalent pure-ReLU network: same depth, at most (M+1) U units and
    (M+1)^2 W weights, identical values at every input."""
    if net.uses_activation(ACT_RHO):
        raise UnsupportedActivationError("rho units cannot be rewritten exactly")
    coeff_cache: dict[int, tuple[BreakpointData, np.ndarray, float, float]] = {}
    # original (layer, unit) -> ([(new unit, coeff)], constant)
    mapping: dict[tuple[int, int], tuple[list[tuple[int, float]], float]] = {}
    new_layers = []
    for li, layer in enumerate(net.layers, start=1):
        units: list[tuple[list[tuple[int, int, float]], float, int]] = []
        for u in range(layer.n_units):
            edges: list[tuple[int, int, float]] = []
            bias = float(layer.bias[u])
            for sl, su, w in layer.unit_edges(u):
                if sl == 0:
                    edges.append((0, su, w))
                else:
                    replacement, const = mapping[(sl, su)]
                    bias += w * const
                    edges.extend((sl, idx, w * cm) for idx, cm in replacement)
            code = int(layer.act[u])
            if code in (ACT_RELU, ACT_LINEAR):
                idx = len(units)
                units.append((edges, bias, code))
                mapping[(li, u)] = ([(idx, 1.0)], 0.0)
                continue
            act = layer.pwl_acts[u]
            key = id(act)
            if key not in coeff_cache:
                coeff_cache[key] = _relu_coefficients(act)
            data, c, c0, h = coeff_cache[key]
            replacement: list[tuple[int, float]] = []
            for m, a_m in enumerate(data.points):
                if c[m] == 0.0:
                    continue
                idx = len(units)
                units.append((list(edges), bias - float(a_m), ACT_RELU))
                replacement.append((idx, float(c[m])))
            if c0 != 0.0:
                idx = len(units)
                neg_edges = [(sl, su, -w) for sl, su, w in edges]
                units.append((neg_edges, float(data.points[0]) - bias, ACT_RELU))
                replacement.append((idx, c0))
            mapping[(li, u)] = (replacement, h)
        new_layers.append(_layer_from_units(units, {}))
    return Network(net.input_dim, new_layers)


def propagate_intervals(net: Network, box) -> list[np.ndarray]:
    """Pre-activation interval of every unit over an input box.

    ``box`` is (d, 2) with [lo, hi] rows.  Returns one (U, 2) array per
    stored layer.
    """
    box_arr = np.asarray(box, dtype=float)
    if box_arr.shape != (net.input_dim, 2) or not np.all(np.isfinite(box_arr)):
        raise ParameterError("box must be a finite (d, 2) array of [lo, hi] rows")
    if np.any(box_arr[:, 0] > box_arr[:, 1]):
        raise ParameterError("box rows must satisfy lo <= hi")
    out_intervals: list[np.ndarray] = [box_arr]
    pre_intervals: list[np.ndarray] = []
    for layer in net.layers:
        pre = np.stack([layer.bias, layer.bias], axis=1).astype(float)
        for u in range(layer.n_units):
            lo, hi = pre[u]
            for sl, su, w in layer.unit_edges(u):
                s_lo, s_hi = out_intervals[sl][su]
                if w >= 0:
                    lo += w * s_lo
                    hi += w * s_hi
                else:
                    lo += w * s_hi
                    hi += w * s_lo
            pre[u] = (lo, hi)
        out = pre.copy()
        for u in range(layer.n_units):
            code = layer.act[u]
            if code == ACT_RELU:
                out[u] = (max(0.0, out[u, 0]), max(0.0, out[u, 1]))
            elif code == ACT_RHO:
                out[u] = (0.0, min(max(0.0, out[u, 1]), 1.0))
            elif code == ACT_PWL:
                act = layer.pwl_acts[u]
                ext = act.extended_to(out[u, 0] - 1.0, out[u, 1] + 1.0)
                inside = ext.x[(ext.x >= out[u, 0]) & (ext.x <= out[u, 1])]
                cand = np.concatenate([out[u], inside])
                vals = ext.eval(cand)
                out[u] = (float(np.min(vals)), float(np.max(vals)))
        pre_intervals.append(pre)
        out_intervals.append(out)
    return pre_intervals


def relu_to_pwl(net: Network, act: ContinuousPWLActivation, box) -> Network:
    """Network over ``act`` computing the same values as the ReLU net on the
    box: same depth, at most 2U units and 4W weights."""
    for layer in net.layers[:-1]:
        if np.any(layer.act != ACT_RELU):
            raise UnsupportedActivationError("source network must be pure ReLU")
    data = BreakpointData.of(act)
    pick = int(np.lexsort((data.points, -np.abs(data.jumps)))[0])
    a = float(data.points[pick])
    r0 = float(data.separations[pick])
    if not np.isfinite(r0):
        r0 = 1.0
    jump = float(data.jumps[pick])
    rho_a = act.eval(a)
    rho_a_half = act.eval(a - 0.5 * r0)

    pre_intervals = propagate_intervals(net, box)
    mapping: dict[tuple[int, int], tuple[list[tuple[int, float]], float]] = {}
    new_layers = []
    for li, layer in enumerate(net.layers, start=1):
        units: list[tuple[list[tuple[int, int, float]], float, int]] = []
        pwl_acts: dict[int, ContinuousPWLActivation] = {}
        for u in range(layer.n_units):
            edges: list[tuple[int, int, float]] = []
            bias = float(layer.bias[u])
            for sl, su, w in layer.unit_edges(u):
                if sl == 0:
                    edges.append((0, su, w))
                else:
                    replacement, const = mapping[(sl, su)]
                    bias += w * const
                    edges.extend((sl, idx, w * cm) for idx, cm in replacement)
            if int(layer.act[u]) == ACT_LINEAR:
                units.append((edges, bias, ACT_LINEAR))
                continue
            lo, hi = pre_intervals[li - 1][u]
            r = 1.25 * max(abs(lo), abs(hi))
            if r == 0.0:
                r = 1.0
            t = r0 / (2.0 * r)
            scaled = [(sl, su, t * w) for sl, su, w in edges]
            idx1 = len(units)
            units.append((list(scaled), a + t * bias, ACT_PWL))
            pwl_acts[idx1] = act
            idx2 = len(units)
            units.append((list(scaled), a - 0.5 * r0 + t * bias, ACT_PWL))
            pwl_acts[idx2] = act
            k = 1.0 / (jump * t)
            mapping[(li, u)] = ([(idx1, k), (idx2, -k)], k * (rho_a_half - rho_a))
        new_layers.append(_layer_from_units(units, pwl_acts))
    converted = Network(net.input_dim, new_layers)
    _spot_check_on_box(net, converted, box)
    return converted


def _spot_check_on_box(original: Network, converted: Network, box, n_random: int = 32):
    box_arr = np.asarray(box, dtype=float)
    d = original.input_dim
    corners = np.array(
        [[box_arr[k, (i >> k) & 1] for k in range(d)] for i in range(2**d)]
    ) if d <= 5 else np.empty((0, d))
    rng = np.random.default_rng(0)
    rand = box_arr[:, 0] + (box_arr[:, 1] - box_arr[:, 0]) * rng.random((n_random, d))
    pts = np.vstack([corners, rand])
    got = converted.eval_batch(pts)
    want = original.eval_batch(pts)
    worst = float(np.max(np.abs(got - want) / (1.0 + np.abs(want))))
    if worst > 1e-8:
        raise ParameterError(
            f"conversion failed its sampling check (relative gap {worst:.3e})"
        )
