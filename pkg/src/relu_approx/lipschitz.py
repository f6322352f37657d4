"""Adaptive architectures for Lipschitz-1 targets on [0, 1].

The function is first interpolated on the coarse grid {t/T}; the residual
f2 = f - interpolant vanishes at the grid nodes and is Lipschitz-2.  On each
subinterval the rescaled residual y -> T f2((t+y)/T) is quantized to a
profile gamma with node values on the lattice (2/m)Z and node-to-node
increments in {-2/m, 0, +2/m}; at most 3^m distinct profiles exist, and the
per-interval error of the quantization is 2/(Tm).  The assignment t ->
gamma_t is pure wiring, so intervals sharing a profile share hardware.

Two realizations are provided: a depth-5 network whose second layer uses the
discontinuous gate rho(z) = z on [0,1), 0 elsewhere, and a pure-ReLU depth-6
network where rho is replaced by a continuous surrogate rho_delta together
with a comb filter that suppresses the surrogate's spillover near the right
end of each subinterval.  The filter construction keeps the unit and weight
counts independent of delta.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .network import Affine, Network, NetworkBuilder
from .pwl import PWL1D
from .report import ApproxReport, uniform_grid_1d


@dataclass(frozen=True)
class CachedProfile:
    """Quantized residual shape: node values (2/m) * cumsum(steps)."""

    m: int
    steps: tuple[int, ...]  # length m, entries in {-1, 0, +1}, summing to 0

    def __post_init__(self):
        if len(self.steps) != self.m:
            raise ParameterError("need exactly m steps")
        if any(s not in (-1, 0, 1) for s in self.steps):
            raise ParameterError("steps must lie in {-1, 0, +1}")
        if sum(self.steps) != 0:
            raise ParameterError("profile must return to zero at the right end")

    def node_values(self) -> np.ndarray:
        """gamma(r/m) for r = 0..m."""
        levels = np.concatenate([[0], np.cumsum(self.steps)])
        return (2.0 / self.m) * levels

    def relu_coefficients(self) -> np.ndarray:
        """c_r with gamma(y) = sum_r c_r relu(y - r/m) on [0, 1]."""
        slopes = 2.0 * np.asarray(self.steps, dtype=float)
        return np.diff(np.concatenate([[0.0], slopes]))

    def eval(self, y) -> np.ndarray:
        nodes = np.arange(self.m + 1) / self.m
        return np.interp(np.asarray(y, dtype=float), nodes, self.node_values())


@dataclass
class AdaptivePlan:
    """Everything function-dependent about an adaptive build."""

    eps: float
    m: int
    T: int
    delta: float | None
    assignment: list[int]           # profile index per subinterval t
    profiles: list[CachedProfile]   # deduplicated, in order of first use

    @property
    def n_profiles(self) -> int:
        return len(self.profiles)

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.eps,
            "m": self.m,
            "T": self.T,
            "delta": self.delta,
            "assignment": list(self.assignment),
            "profiles": [list(p.steps) for p in self.profiles],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(data: dict) -> "AdaptivePlan":
        m = int(data["m"])
        return AdaptivePlan(
            eps=float(data["epsilon"]),
            m=m,
            T=int(data["T"]),
            delta=None if data["delta"] is None else float(data["delta"]),
            assignment=[int(v) for v in data["assignment"]],
            profiles=[CachedProfile(m, tuple(int(s) for s in p)) for p in data["profiles"]],
        )

    @staticmethod
    def from_json(text: str) -> "AdaptivePlan":
        return AdaptivePlan.from_json_dict(json.loads(text))


def cache_resolution(eps: float) -> int:
    """Profile node count m = ceil(log_3(1/eps) / 2)."""
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps}")
    return max(1, math.ceil(0.5 * math.log(1.0 / eps) / math.log(3.0)))


def coarse_interpolant(f: Callable[[float], float], T: int) -> tuple[PWL1D, Callable]:
    """Interpolate f at {t/T}; return the interpolant and the residual.

    The residual vanishes at every node by construction and is Lipschitz-2
    when f is Lipschitz-1; both properties are spot-checked.
    """
    if T < 1:
        raise ParameterError("T must be >= 1")
    nodes = np.arange(T + 1) / T
    values = np.array([float(f(float(x))) for x in nodes])
    interp = PWL1D(nodes, values)

    def residual(x):
        x_arr = np.asarray(x, dtype=float)
        raw = np.vectorize(f, otypes=[float])(x_arr) - np.interp(x_arr, nodes, values)
        return float(raw) if np.isscalar(x) else raw

    for t in range(0, T + 1, max(1, T // 7)):
        if residual(float(nodes[t])) != 0.0:
            raise ParameterError("residual does not vanish at a grid node")
    rng = np.random.default_rng(0)
    xs = rng.uniform(0.0, 1.0, 64)
    ys = np.clip(xs + rng.uniform(-0.5, 0.5, 64), 0.0, 1.0)
    gaps = np.abs(residual(xs) - residual(ys))
    if np.any(gaps > 2.0 * np.abs(xs - ys) + 1e-9):
        raise ParameterError("residual violates the Lipschitz-2 bound; is f Lipschitz-1?")
    return interp, residual


def quantize_profile(residual: Callable, t: int, T: int, m: int) -> CachedProfile:
    """Quantize the rescaled residual on subinterval t to a cached profile.

    Node levels are floor(g(r/m) / (2/m)).  A value within 1e-9 of a lattice
    point snaps to it first (so float dust around an exact boundary floors
    the way the exact value would), and the levels are clamped to the cone
    |level| <= m - r and to unit steps, which changes nothing in exact
    arithmetic and keeps the profile legal under noise.
    """
    levels = [0]
    for r in range(1, m + 1):
        y = r / m
        g = T * residual((t + y) / T)
        v = g * m / 2.0
        raw = round(v) if abs(v - round(v)) <= 1e-9 else math.floor(v)
        k = min(max(raw, levels[-1] - 1, -(m - r)), levels[-1] + 1, m - r)
        levels.append(k)
    steps = tuple(int(b - a) for a, b in zip(levels, levels[1:]))
    return CachedProfile(m, steps)


def _plan(f: Callable, eps: float, budget: float,
          delta: float | None) -> tuple[AdaptivePlan, PWL1D]:
    m = cache_resolution(eps)
    T = math.ceil(budget / (m * eps))
    interp, residual = coarse_interpolant(f, T)
    profiles: list[CachedProfile] = []
    index: dict[tuple[int, ...], int] = {}
    assignment: list[int] = []
    for t in range(T):
        profile = quantize_profile(residual, t, T, m)
        if profile.steps not in index:
            index[profile.steps] = len(profiles)
            profiles.append(profile)
        assignment.append(index[profile.steps])
    plan = AdaptivePlan(eps=eps, m=m, T=T, delta=delta,
                        assignment=assignment, profiles=profiles)
    return plan, interp


def _interpolant_readout(nb: NetworkBuilder, interp: PWL1D) -> Affine:
    """Depth-3 ReLU realization of the coarse interpolant; returns its
    readout as an affine expression over one layer of units."""
    T = interp.x.size - 1
    slopes = np.diff(interp.y) * T
    weights = np.diff(np.concatenate([[0.0], slopes]))
    x = Affine.of_input(0)
    parts = [Affine.constant(float(interp.y[0]))]
    for t in range(T):
        unit = nb.add_unit(1, x.shifted(-float(interp.x[t])))
        parts.append(unit.scaled(float(weights[t])))
    return Affine.sum(parts)


def build_cache_network_rho(f: Callable, eps: float) -> tuple[Network, AdaptivePlan]:
    """Depth-5 network with rho gates in layer 2 realizing the cached
    construction; T = ceil(2/(m eps)) already meets the error target
    sup_{[0,1)} |f - net| <= 2/(Tm) <= eps."""
    plan, interp = _plan(f, eps, budget=2.0, delta=None)
    m, T = plan.m, plan.T
    nb = NetworkBuilder(1)
    x = Affine.of_input(0)
    gates = [
        nb.add_unit(1, x.scaled(float(T)).shifted(-float(t)), activation="rho")
        for t in range(T)
    ]
    f1 = _interpolant_readout(nb, interp)
    selectors = []
    for p in range(plan.n_profiles):
        members = [gates[t] for t, pi in enumerate(plan.assignment) if pi == p]
        selectors.append(nb.add_unit(2, Affine.sum(members)))
    out_parts = [f1]
    for p, profile in enumerate(plan.profiles):
        coeffs = profile.relu_coefficients()
        for r in range(m):
            unit = nb.add_unit(3, selectors[p].shifted(-r / m))
            out_parts.append(unit.scaled(float(coeffs[r]) / T))
    nb.set_output(Affine.sum(out_parts))
    return nb.build(), plan


def filter_tooth_breakpoints(delta: float) -> tuple[float, float, float, float]:
    """Knots of the unit filter tooth: 0 < delta <= 1-2delta < 1-delta."""
    if not 0.0 < delta < 1.0 / 3.0:
        raise ParameterError(f"delta must lie in (0, 1/3), got {delta}")
    return (0.0, delta, 1.0 - 2.0 * delta, 1.0 - delta)


def filter_tooth_values(y, delta: float) -> np.ndarray:
    """Closed form of the filter tooth (rise, plateau at 1, fall, zero)."""
    y_arr = np.asarray(y, dtype=float)
    up = np.clip(y_arr / delta, 0.0, 1.0)
    down = np.clip((1.0 - delta - y_arr) / delta, 0.0, 1.0)
    return np.where((y_arr >= 0.0) & (y_arr < 1.0 - delta), np.minimum(up, down), 0.0)


def _append_filter(nb: NetworkBuilder, layer: int, T: int, delta: float) -> Affine:
    """Comb filter sum_t tooth(T x - t): 4T relu units, values in [0, 1]."""
    knots = filter_tooth_breakpoints(delta)
    x = Affine.of_input(0)
    parts = []
    inv = 1.0 / delta
    for t in range(T):
        z = x.scaled(float(T)).shifted(-float(t))
        u1 = nb.add_unit(layer, z.shifted(-knots[0]))
        u2 = nb.add_unit(layer, z.shifted(-knots[1]))
        u3 = nb.add_unit(layer, z.shifted(-knots[2]))
        u4 = nb.add_unit(layer, z.shifted(-knots[3]))
        parts.append(u1.minus(u2).minus(u3).plus(u4).scaled(inv))
    return Affine.sum(parts)


def build_filter(T: int, delta: float) -> Network:
    """Depth-3 ReLU comb filter with at most 4T breakpoints."""
    if T < 1:
        raise ParameterError("T must be >= 1")
    nb = NetworkBuilder(1)
    nb.set_output(_append_filter(nb, 1, T, delta))
    return nb.build()


def default_smoothing(eps: float, T: int) -> float:
    """Budget split: T = ceil(4/(m eps)) makes 2/(Tm) <= eps/2, and this
    delta makes the smoothing spillover 8 delta / T <= eps/2."""
    return min(0.25 - 1e-6, eps * T / 16.0)


def build_adaptive_relu(
    f: Callable, eps: float, delta: float | None = None
) -> tuple[Network, AdaptivePlan, ApproxReport]:
    """Pure-ReLU depth-6 realization of the cached construction.

    Layer 2 holds, per subinterval: a 3-unit surrogate gate rho_delta
    (continuous, supported on [0, 1)), the coarse interpolant's unit and 4
    filter units.  Layers 3 and 4 are the profile selectors and the profile
    ramps; layer 5 applies relu(f2_delta + 2 Phi - 1) - relu(2 Phi - 1),
    which zeroes the surrogate's spillover where the filter is down and
    passes f2_delta through where the filter plateaus.  Sizes do not depend
    on delta.
    """
    t0 = time.perf_counter()
    plan, interp = _plan(f, eps, budget=4.0, delta=delta)
    m, T = plan.m, plan.T
    if delta is None:
        delta = default_smoothing(eps, T)
        plan.delta = delta
    if not 0.0 < delta < 1.0 / 3.0:
        raise ParameterError(f"delta must lie in (0, 1/3), got {delta}")

    nb = NetworkBuilder(1)
    x = Affine.of_input(0)
    gates = []
    for t in range(T):
        z = x.scaled(float(T)).shifted(-float(t))
        u1 = nb.add_unit(1, z)
        u2 = nb.add_unit(1, z.shifted(-(1.0 - delta)))
        u3 = nb.add_unit(1, z.shifted(-1.0))
        gates.append(
            u1.plus(u2.scaled(-1.0 / delta)).plus(u3.scaled((1.0 - delta) / delta))
        )
    f1 = _interpolant_readout(nb, interp)
    comb = _append_filter(nb, 1, T, delta)

    selectors = []
    for p in range(plan.n_profiles):
        members = [gates[t] for t, pi in enumerate(plan.assignment) if pi == p]
        selectors.append(nb.add_unit(2, Affine.sum(members)))
    ramp_parts = []
    for p, profile in enumerate(plan.profiles):
        coeffs = profile.relu_coefficients()
        for r in range(m):
            unit = nb.add_unit(3, selectors[p].shifted(-r / m))
            ramp_parts.append(unit.scaled(float(coeffs[r]) / T))
    f2_delta = Affine.sum(ramp_parts)
    gate_expr = comb.scaled(2.0).shifted(-1.0)
    kept = nb.add_unit(4, f2_delta.plus(gate_expr))
    spill = nb.add_unit(4, gate_expr)
    nb.set_output(f1.plus(kept).minus(spill))
    net = nb.build()

    grid = uniform_grid_1d(0.0, 1.0 - 1e-9, 10_001)
    target = np.vectorize(f, otypes=[float])(grid)
    err = float(np.max(np.abs(net.eval_batch(grid) - target)))
    err_at_one = abs(net.eval(1.0) - float(f(1.0)))
    report = ApproxReport(
        builder="lipschitz",
        params={"eps": eps, "m": m, "T": T, "delta": delta,
                "profiles_used": plan.n_profiles},
        measured_error=err,
        grid="uniform, 10001 points on [0, 1 - 1e-9]",
        metrics=net.metrics(),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"error_at_x1": err_at_one},
    )
    return net, plan, report
