"""Partition-of-unity Taylor approximation by deep ReLU networks.

The construction covers [0, 1]^d with a grid of (N+1)^d trapezoid bumps

    phi_m(x) = prod_k psi(3N x_k - 3 m_k),    psi = 1 on |u|<1, 0 on |u|>2,

expands the target around every grid point as a degree-(order-1) Taylor
polynomial with coefficients a_{m,alpha} = D^alpha f(m/N) / alpha!, and
realizes every product phi_m(x) (x - m/N)^alpha with a right-nested chain of
approximate multipliers accurate to delta.  The resolution and the product
accuracy

    N = ceil((order! / (2^d d^order) * eps/2) ** (-1/order)),
    delta = eps / (2^(d+1) * d^order * (d + order)),

split the error budget eps/2 + eps/2 between the Taylor remainder and the
multiplication chains.

Every term network shares one architecture per multi-index; a term for grid
point m differs from the origin term only in unit biases.  The full network
is therefore materialized by stamping the per-multi-index template across
all grid cells (flat arrays, no per-unit Python objects), and the output
unit carries the only function-dependent weights a_{m,alpha}.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import append_product_block, multiplier_params
from .errors import ParameterError
from .network import (
    ACT_LINEAR,
    Affine,
    Layer,
    Network,
    NetworkBuilder,
)
from .pwl import PWL1D
from .report import ApproxReport, default_grid
from .targets import MultiIndex, SmoothFunctionOracle

PRACTICAL_LIMITS = {"d": 3, "order": 4, "eps": 1e-3}


def choose_resolution(d: int, order: int, eps: float) -> int:
    """Grid resolution N making the Taylor remainder at most eps/2."""
    _check_problem(d, order, eps)
    base = math.factorial(order) / (2.0**d * float(d) ** order) * (eps / 2.0)
    return max(1, math.ceil(base ** (-1.0 / order)))


def choose_product_accuracy(d: int, order: int, eps: float) -> float:
    """Multiplier accuracy making the chained-product error at most eps/2."""
    _check_problem(d, order, eps)
    return eps / (2.0 ** (d + 1) * float(d) ** order * (d + order))


def _check_problem(d: int, order: int, eps: float) -> None:
    if d < 1 or order < 1:
        raise ParameterError("dimension and order must be positive")
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")


def multi_indices(d: int, order: int) -> list[MultiIndex]:
    """All alpha with |alpha| < order, sorted by degree then lexicographically."""
    found = [
        m for m in itertools.product(range(order), repeat=d) if sum(m) < order
    ]
    return sorted(found, key=lambda t: (sum(t), t))


# -- the trapezoid bump --------------------------------------------------------


def psi_pwl() -> PWL1D:
    return PWL1D([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0], [0.0, 0.0, 1.0, 1.0, 0.0, 0.0])


def psi_values(u) -> np.ndarray:
    """Closed-form psi, vectorized: clip(2 - |u|, 0, 1)."""
    return np.clip(2.0 - np.abs(np.asarray(u, dtype=float)), 0.0, 1.0)


def _append_psi(nb: NetworkBuilder, layer: int, arg: Affine) -> Affine:
    """psi(arg) = relu(arg+2) - relu(arg+1) - relu(arg-1) + relu(arg-2)."""
    u1 = nb.add_unit(layer, arg.shifted(2.0))
    u2 = nb.add_unit(layer, arg.shifted(1.0))
    u3 = nb.add_unit(layer, arg.shifted(-1.0))
    u4 = nb.add_unit(layer, arg.shifted(-2.0))
    return u1.minus(u2).minus(u3).plus(u4)


def build_psi() -> tuple[PWL1D, Network]:
    """The trapezoid as an exact PWL function and as its 4-unit ReLU net."""
    nb = NetworkBuilder(1)
    nb.set_output(_append_psi(nb, 1, Affine.of_input(0)))
    return psi_pwl(), nb.build()


# -- Taylor data ----------------------------------------------------------------


def _cell_grid(N: int, d: int) -> np.ndarray:
    mesh = np.meshgrid(*[np.arange(N + 1)] * d, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh]).astype(np.int64)


def _as_points(points, d: int) -> np.ndarray:
    """Normalize to an (n, d) array; a flat array is n points when d == 1,
    one point otherwise."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if d == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ParameterError(f"expected points of dimension {d}, got shape {pts.shape}")
    return pts


@dataclass
class TaylorGrid:
    """Local Taylor coefficients a_{m,alpha} = D^alpha f(m/N) / alpha!."""

    N: int
    d: int
    order: int
    multis: tuple[MultiIndex, ...]
    coeffs: np.ndarray  # (n_cells, n_multis), cells in C order over {0..N}^d
    warnings: list[str] = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return (self.N + 1) ** self.d

    def flat(self) -> np.ndarray:
        """Coefficients ordered multi-index-major, matching the architecture."""
        return self.coeffs.T.ravel()

    def evaluate_local_sum(self, points) -> np.ndarray:
        """Exact evaluation of f_1 = sum_m phi_m P_m (no networks involved)."""
        pts = _as_points(points, self.d)
        n = pts.shape[0]
        total = np.zeros(n)
        base = np.floor(self.N * pts).astype(np.int64)
        dims = (self.N + 1,) * self.d
        for combo in itertools.product((0, 1), repeat=self.d):
            m = base + np.asarray(combo)
            valid = np.all((m >= 0) & (m <= self.N), axis=1)
            if not np.any(valid):
                continue
            z = pts[valid] - m[valid] / self.N
            phi = np.prod(psi_values(3.0 * self.N * z), axis=1)
            cell = np.ravel_multi_index(m[valid].T, dims)
            poly = np.zeros(z.shape[0])
            for ai, alpha in enumerate(self.multis):
                mono = np.ones(z.shape[0])
                for k, a_k in enumerate(alpha):
                    if a_k:
                        mono = mono * z[:, k] ** a_k
                poly += self.coeffs[cell, ai] * mono
            total[valid] += phi * poly
        return total

    def to_json_dict(self) -> dict:
        entries = []
        cells = _cell_grid(self.N, self.d)
        for ci in range(self.n_cells):
            for ai, alpha in enumerate(self.multis):
                entries.append(
                    {
                        "m": [int(v) for v in cells[ci]],
                        "n": list(alpha),
                        "a": float(self.coeffs[ci, ai]),
                    }
                )
        return {"N": self.N, "d": self.d, "n": self.order, "coeffs": entries}

    @staticmethod
    def from_json_dict(data: dict) -> "TaylorGrid":
        N, d, order = int(data["N"]), int(data["d"]), int(data["n"])
        multis = tuple(multi_indices(d, order))
        index = {alpha: i for i, alpha in enumerate(multis)}
        dims = (N + 1,) * d
        coeffs = np.zeros(((N + 1) ** d, len(multis)))
        for entry in data["coeffs"]:
            cell = int(np.ravel_multi_index(tuple(entry["m"]), dims))
            coeffs[cell, index[tuple(entry["n"])]] = float(entry["a"])
        return TaylorGrid(N, d, order, multis, coeffs)


def taylor_coefficients(oracle: SmoothFunctionOracle, N: int, order: int) -> TaylorGrid:
    """Fill the coefficient grid from the oracle's exact derivatives.

    Coefficients beyond the unit bound are collected as warnings: they mean
    the target lies outside the claimed Sobolev ball.
    """
    d = oracle.d
    multis = tuple(multi_indices(d, order))
    cells = _cell_grid(N, d)
    coeffs = np.empty((cells.shape[0], len(multis)))
    fact = np.array([math.prod(math.factorial(a) for a in alpha) for alpha in multis])
    for ci in range(cells.shape[0]):
        x = cells[ci] / N
        for ai, alpha in enumerate(multis):
            if sum(alpha) == 0:
                value = oracle.eval(x)
            else:
                value = oracle.deriv(alpha, x)
            coeffs[ci, ai] = value / fact[ai]
    warnings: list[str] = []
    bad = np.argwhere(np.abs(coeffs) > 1.0 + 1e-9)
    for ci, ai in bad[:20]:
        warnings.append(
            f"|a| = {abs(coeffs[ci, ai]):.6g} > 1 at grid point "
            f"{tuple(int(v) for v in cells[ci])}, multi-index {multis[ai]}"
        )
    if len(bad) > 20:
        warnings.append(f"... and {len(bad) - 20} more coefficient-bound violations")
    return TaylorGrid(N, d, order, multis, coeffs, warnings)


# -- term networks ----------------------------------------------------------------


def build_term_network(m: MultiIndex, alpha: MultiIndex, N: int, delta: float,
                       d: int, order: int) -> Network:
    """Network for one term phi_m(x) (x - m/N)^alpha.

    The factor list (psi factors in coordinate order, then linear factors in
    multi-index order) is multiplied right-nested with multipliers of
    accuracy delta and magnitude bound d + order; the term error is at most
    (d + order) * delta, and the output is identically zero outside the
    support of phi_m because a zero factor collapses every chained product.

    Each trapezoid is materialized through a single relu collector unit (it
    is nonnegative, so the unit passes it through unchanged).  This keeps
    the outside-support zero exact in float arithmetic: the collector's
    pre-activation sums the four sigma outputs with weights +-1, whose
    products round to nothing, so fsum returns a literal 0.0 that then
    collapses the chains bit-for-bit.
    """
    if len(m) != d or len(alpha) != d:
        raise ParameterError("grid point and multi-index must have length d")
    if not all(0 <= mk <= N for mk in m):
        raise ParameterError(f"grid point {m} outside {{0..{N}}}^{d}")
    params = multiplier_params(float(d + order), delta)
    nb = NetworkBuilder(d)
    factors: list[Affine] = []
    for k in range(d):
        arg = Affine.of_input(k, 3.0 * N).shifted(-3.0 * m[k])
        factors.append(nb.add_unit(2, _append_psi(nb, 1, arg)))
    for k, a_k in enumerate(alpha):
        for _ in range(a_k):
            factors.append(Affine.of_input(k).shifted(-(m[k] / N) if m[k] else 0.0))
    value = factors[-1]
    next_layer = 3
    for factor in reversed(factors[:-1]):
        value, next_layer = append_product_block(nb, next_layer, factor, value, params)
    nb.set_output(value)
    return nb.build()


@dataclass
class _TermTemplate:
    multi: MultiIndex
    net: Network
    readout: list[tuple[int, int, float]]
    input_coeff: list[np.ndarray]  # per hidden layer: (units, d) input-edge weight sums


def _make_template(alpha: MultiIndex, N: int, delta: float, d: int, order: int) -> _TermTemplate:
    net = build_term_network((0,) * d, alpha, N, delta, d, order)
    out = net.layers[-1]
    if float(out.bias[0]) != 0.0:
        raise ParameterError("term template readout must be purely linear")
    readout = out.unit_edges(0)
    input_coeff = []
    for layer in net.layers[:-1]:
        coeff = np.zeros((layer.n_units, d))
        for u in range(layer.n_units):
            for sl, su, w in layer.unit_edges(u):
                if sl == 0:
                    coeff[u, su] += w
        input_coeff.append(coeff)
    return _TermTemplate(alpha, net, readout, input_coeff)


# -- the stamped architecture ------------------------------------------------------


@dataclass
class SobolevArchitecture:
    """Function-independent skeleton with slots for the output weights.

    Terms are ordered multi-index-major, then grid-cell-major (C order), so
    the flat coefficient vector of a TaylorGrid lines up with ``out_term``.
    """

    d: int
    order: int
    eps: float
    N: int
    delta: float
    multis: tuple[MultiIndex, ...]
    templates: list[_TermTemplate]
    hidden_layers: tuple[Layer, ...]
    out_edge_layer: np.ndarray
    out_edge_unit: np.ndarray
    out_base_coeff: np.ndarray
    out_term: np.ndarray

    @property
    def n_cells(self) -> int:
        return (self.N + 1) ** self.d

    @property
    def n_terms(self) -> int:
        return len(self.multis) * self.n_cells

    def coefficients_flat(self, grid: TaylorGrid) -> np.ndarray:
        if (grid.N, grid.d, grid.order) != (self.N, self.d, self.order):
            raise ParameterError(
                f"coefficient grid (N={grid.N}, d={grid.d}, n={grid.order}) does not "
                f"match the architecture (N={self.N}, d={self.d}, n={self.order})"
            )
        if tuple(grid.multis) != tuple(self.multis):
            raise ParameterError("multi-index ordering mismatch")
        return grid.flat()

    def network_with(self, a_flat: np.ndarray) -> Network:
        a_flat = np.asarray(a_flat, dtype=float)
        if a_flat.shape != (self.n_terms,):
            raise ParameterError(
                f"expected {self.n_terms} output coefficients, got {a_flat.shape}"
            )
        weights = self.out_base_coeff * a_flat[self.out_term]
        n_edges = weights.size
        out_layer = Layer(
            np.zeros(1),
            np.array([ACT_LINEAR], dtype=np.int8),
            np.array([0, n_edges], dtype=np.int64),
            self.out_edge_layer,
            self.out_edge_unit,
            weights,
        )
        return Network(self.d, list(self.hidden_layers) + [out_layer])

    def evaluate(self, a_flat: np.ndarray, points) -> np.ndarray:
        """Grid evaluation exploiting locality: only the at most 2^d bumps
        covering each point contribute, each through its small template."""
        a_flat = np.asarray(a_flat, dtype=float)
        pts = _as_points(points, self.d)
        n = pts.shape[0]
        total = np.zeros(n)
        base = np.floor(self.N * pts).astype(np.int64)
        dims = (self.N + 1,) * self.d
        for combo in itertools.product((0, 1), repeat=self.d):
            m = base + np.asarray(combo)
            valid = np.all((m >= 0) & (m <= self.N), axis=1)
            if not np.any(valid):
                continue
            z = pts[valid] - m[valid] / self.N
            cell = np.ravel_multi_index(m[valid].T, dims)
            for ti, template in enumerate(self.templates):
                vals = template.net.eval_batch(z)
                total[valid] += vals * a_flat[ti * self.n_cells + cell]
        return total

    def metrics(self):
        from .network import ComplexityMetrics

        connections = sum(l.n_edges for l in self.hidden_layers) + self.out_term.size
        units = sum(l.n_units for l in self.hidden_layers) + 1
        return ComplexityMetrics(
            depth=len(self.hidden_layers) + 2,
            hidden_units=units - 1,
            computation_units=units,
            connections=connections,
            weights=connections + units,
        )

    def skeleton_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(
            f"{self.d}|{self.order}|{self.N}|{self.delta!r}|{self.multis!r}".encode()
        )
        for layer in self.hidden_layers:
            for arr in (layer.bias, layer.act, layer.edge_ptr, layer.edge_layer,
                        layer.edge_unit, layer.edge_weight):
                digest.update(np.ascontiguousarray(arr).tobytes())
        for arr in (self.out_edge_layer, self.out_edge_unit,
                    self.out_base_coeff, self.out_term):
            digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()


def build_architecture(d: int, order: int, eps: float) -> SobolevArchitecture:
    N = choose_resolution(d, order, eps)
    delta = choose_product_accuracy(d, order, eps)
    multis = tuple(multi_indices(d, order))
    templates = [_make_template(alpha, N, delta, d, order) for alpha in multis]
    cells = _cell_grid(N, d)
    n_cells = cells.shape[0]

    n_hidden = max(len(t.net.layers) - 1 for t in templates)
    units_per = np.zeros((len(templates), n_hidden + 1), dtype=np.int64)
    for ti, t in enumerate(templates):
        for li, layer in enumerate(t.net.layers[:-1], start=1):
            units_per[ti, li] = layer.n_units
    # base offset of template ti's block inside every global layer
    base = np.zeros_like(units_per)
    base[1:] = np.cumsum(units_per[:-1] * n_cells, axis=0)

    hidden_layers = []
    for gl in range(1, n_hidden + 1):
        biases, acts = [], []
        ptr_diffs, e_layer, e_unit, e_weight = [], [], [], []
        for ti, t in enumerate(templates):
            if gl > len(t.net.layers) - 1:
                continue
            layer = t.net.layers[gl - 1]
            n_u = layer.n_units
            shift = -(cells @ t.input_coeff[gl - 1].T) / N  # (n_cells, n_u)
            biases.append(np.tile(layer.bias, n_cells) + shift.ravel())
            acts.append(np.tile(layer.act, n_cells))
            E = layer.n_edges
            src_units = np.where(
                layer.edge_layer > 0, units_per[ti, layer.edge_layer], 0
            ).astype(np.int64)
            src_base = np.where(
                layer.edge_layer > 0, base[ti, layer.edge_layer], 0
            ).astype(np.int64)
            cell_rep = np.repeat(np.arange(n_cells, dtype=np.int64), E)
            e_unit.append(
                np.tile(layer.edge_unit.astype(np.int64), n_cells)
                + np.tile(src_base, n_cells)
                + cell_rep * np.tile(src_units, n_cells)
            )
            e_layer.append(np.tile(layer.edge_layer, n_cells))
            e_weight.append(np.tile(layer.edge_weight, n_cells))
            ptr_diffs.append(np.tile(np.diff(layer.edge_ptr), n_cells))
        ptr = np.concatenate([[0], np.cumsum(np.concatenate(ptr_diffs))])
        hidden_layers.append(
            Layer(
                np.concatenate(biases),
                np.concatenate(acts),
                ptr,
                np.concatenate(e_layer),
                np.concatenate(e_unit).astype(np.int32),
                np.concatenate(e_weight),
            )
        )

    out_layer_parts, out_unit_parts, out_coeff_parts, out_term_parts = [], [], [], []
    for ti, t in enumerate(templates):
        r_layers = np.array([sl for sl, _, _ in t.readout], dtype=np.int64)
        r_units = np.array([su for _, su, _ in t.readout], dtype=np.int64)
        r_coeffs = np.array([w for _, _, w in t.readout])
        R = r_layers.size
        cell_rep = np.repeat(np.arange(n_cells, dtype=np.int64), R)
        out_layer_parts.append(np.tile(r_layers, n_cells))
        out_unit_parts.append(
            np.tile(r_units + base[ti, r_layers], n_cells)
            + cell_rep * np.tile(units_per[ti, r_layers], n_cells)
        )
        out_coeff_parts.append(np.tile(r_coeffs, n_cells))
        out_term_parts.append(ti * n_cells + cell_rep)

    return SobolevArchitecture(
        d=d,
        order=order,
        eps=eps,
        N=N,
        delta=delta,
        multis=multis,
        templates=templates,
        hidden_layers=tuple(hidden_layers),
        out_edge_layer=np.concatenate(out_layer_parts).astype(np.int32),
        out_edge_unit=np.concatenate(out_unit_parts).astype(np.int32),
        out_base_coeff=np.concatenate(out_coeff_parts),
        out_term=np.concatenate(out_term_parts),
    )


def build_sobolev_approximator(
    oracle: SmoothFunctionOracle,
    eps: float,
    strict: bool = False,
    enforce_limits: bool = True,
    measure_points=None,
) -> tuple[Network, SobolevArchitecture, ApproxReport]:
    """Full construction: architecture, Taylor weights, measured grid error.

    In strict mode any coefficient-bound violation (the target escaping the
    claimed Sobolev ball) aborts; otherwise violations are reported in the
    result and the build proceeds.
    """
    d, order = oracle.d, oracle.order
    _check_problem(d, order, eps)
    if enforce_limits and (
        d > PRACTICAL_LIMITS["d"]
        or order > PRACTICAL_LIMITS["order"]
        or eps < PRACTICAL_LIMITS["eps"]
    ):
        raise ParameterError(
            f"(d={d}, order={order}, eps={eps}) exceeds the practical limits "
            f"{PRACTICAL_LIMITS}; pass enforce_limits=False to override"
        )
    t0 = time.perf_counter()
    arch = build_architecture(d, order, eps)
    grid = taylor_coefficients(oracle, arch.N, order)
    if strict and grid.warnings:
        raise ParameterError(
            "coefficient bound violated (target outside the unit ball): "
            + "; ".join(grid.warnings[:3])
        )
    a_flat = arch.coefficients_flat(grid)
    net = arch.network_with(a_flat)
    pts = _as_points(default_grid(d) if measure_points is None else measure_points, d)
    approx = arch.evaluate(a_flat, pts)
    target = np.array([oracle.eval(p) for p in pts])
    err = float(np.max(np.abs(approx - target)))
    report = ApproxReport(
        builder="sobolev",
        params={"d": d, "n": order, "eps": eps, "N": arch.N, "delta": arch.delta},
        measured_error=err,
        grid=f"uniform, {pts.shape[0]} points on [0,1]^{d}",
        metrics=arch.metrics(),
        wall_ms=1000.0 * (time.perf_counter() - t0),
        extra={"coefficient_warnings": grid.warnings,
               "skeleton_hash": arch.skeleton_hash()},
    )
    return net, arch, report


def reweight_architecture(arch: SobolevArchitecture, grid: TaylorGrid) -> Network:
    """Same skeleton, new output weights: metrics are identical by sharing."""
    return arch.network_with(arch.coefficients_flat(grid))
