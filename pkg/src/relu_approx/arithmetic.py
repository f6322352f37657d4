"""Elementary deep-ReLU constructions: tooth, sawtooth, squaring, multiplication.

The squaring network realizes the interpolation refinement

    f_m(x) = x - sum_{s=1..m} g_s(x) / 2**(2s),

where g_s is the s-fold composition of the tooth g; f_m interpolates x^2 at
the dyadic nodes k/2^m and its uniform error on [0, 1] is exactly
2**(-2m-2).  The approximate multiplier reduces x*y to three squarings via
the polarization identity x*y = ((x+y)^2 - x^2 - y^2) / 2, rescaled so every
squaring input lands in [0, 1]:

    mul(x, y) = 2 M^2 (f(|x+y|/2M) - f(|x|/2M) - f(|y|/2M)).

Each squaring is accurate to delta = eps / (6 M^2), so the triangle
inequality gives |mul(x, y) - x y| <= eps on the box |x|, |y| <= M, and
mul(x, 0) = mul(0, y) = 0 holds identically because the corresponding chains
cancel term by term.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError
from .network import Affine, Network, NetworkBuilder


@dataclass(frozen=True)
class SquareApproxParams:
    """Refinement level and the exact uniform error it guarantees."""

    m: int

    @property
    def sup_error(self) -> float:
        return 2.0 ** (-2 * self.m - 2)


@dataclass(frozen=True)
class MultiplierParams:
    """Derived constants of the approximate multiplier."""

    bound: float
    eps: float

    @property
    def delta(self) -> float:
        """Accuracy demanded of each squaring subnet."""
        return self.eps / (6.0 * self.bound * self.bound)

    @property
    def chain_length(self) -> int:
        return square_depth_for_error(self.delta)


def square_depth_for_error(delta: float) -> int:
    """Smallest m with 2**(-2m-2) <= delta."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    m = 1
    while 2.0 ** (-2 * m - 2) > delta:
        m += 1
    return m


def build_tooth() -> Network:
    """Depth-3 net computing g(x) = 2 relu(x) - 4 relu(x - 1/2) + 2 relu(x - 1)."""
    nb = NetworkBuilder(1)
    nb.set_output(_append_tooth_block(nb, 1, Affine.of_input(0)))
    return nb.build()


def build_sawtooth(s: int) -> Network:
    """Net computing the s-fold tooth composition g_s on [0, 1]; depth s + 2."""
    if s < 1:
        raise ParameterError("s must be >= 1")
    nb = NetworkBuilder(1)
    value = Affine.of_input(0)
    for level in range(1, s + 1):
        value = _append_tooth_block(nb, level, value)
    nb.set_output(value)
    return nb.build()


def build_square(m: int) -> Network:
    """Net computing f_m on [0, 1]: depth m + 2, 3m hidden units, with skip
    connections accumulating x - sum g_s / 4^s straight into the output."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    nb = NetworkBuilder(1)
    nb.set_output(append_square_chain(nb, 1, Affine.of_input(0), m))
    return nb.build()


def build_abs() -> Network:
    """Depth-3 net computing relu(x) + relu(-x) = |x| exactly."""
    nb = NetworkBuilder(1)
    x = Affine.of_input(0)
    pos = nb.add_unit(1, x)
    neg = nb.add_unit(1, x.scaled(-1.0))
    nb.set_output(pos.plus(neg))
    return nb.build()


def build_multiplier(bound: float, eps: float) -> Network:
    """Two-input net with |mul(x, y) - x y| <= eps on |x|, |y| <= bound and
    exact zeros on the axes; depth grows affinely in log2(1/eps)."""
    params = multiplier_params(bound, eps)
    nb = NetworkBuilder(2)
    value, _ = append_product_block(
        nb, 1, Affine.of_input(0), Affine.of_input(1), params
    )
    nb.set_output(value)
    return nb.build()


def multiplier_params(bound: float, eps: float) -> MultiplierParams:
    if bound < 1.0:
        raise ParameterError(f"magnitude bound must be >= 1, got {bound}")
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    return MultiplierParams(bound=float(bound), eps=float(eps))


# -- reusable blocks -----------------------------------------------------------


def _append_tooth_block(nb: NetworkBuilder, layer: int, value: Affine) -> Affine:
    """Three relu units turning a pre-activation into the tooth of it."""
    u1 = nb.add_unit(layer, value)
    u2 = nb.add_unit(layer, value.shifted(-0.5))
    u3 = nb.add_unit(layer, value.shifted(-1.0))
    return u1.scaled(2.0).plus(u2.scaled(-4.0)).plus(u3.scaled(2.0))


def append_square_chain(nb: NetworkBuilder, first_layer: int, value: Affine,
                        m: int) -> Affine:
    """Append the m-level squaring chain fed by ``value``; the returned affine
    expression reads value - sum_s g_s/4^s across the chain's layers."""
    current = value
    result = value
    for s in range(1, m + 1):
        current = _append_tooth_block(nb, first_layer + s - 1, current)
        result = result.plus(current.scaled(-(4.0 ** -s)))
    return result


def append_product_block(nb: NetworkBuilder, first_layer: int, u: Affine,
                         v: Affine, params: MultiplierParams) -> tuple[Affine, int]:
    """Append an approximate multiplier for ``u * v`` starting at
    ``first_layer``; returns (product expression, next free layer).

    Layout: one layer of six relu units realizing |u+v|, |u|, |v| (each as a
    +/- pair, scaled into [0, 1]), then three parallel squaring chains.
    """
    m = params.chain_length
    scale = 1.0 / (2.0 * params.bound)
    pairs = []
    for expr in (u.plus(v), u, v):
        p = nb.add_unit(first_layer, expr.scaled(scale))
        n = nb.add_unit(first_layer, expr.scaled(-scale))
        pairs.append(p.plus(n))
    chains = [append_square_chain(nb, first_layer + 1, pair, m) for pair in pairs]
    value = chains[0].minus(chains[1]).minus(chains[2])
    value = value.scaled(2.0 * params.bound * params.bound)
    return value, first_layer + 1 + m
