"""Built-in target functions and smooth-function oracles.

An oracle exposes exact partial derivatives up to the order the Taylor stage
needs; a finite-difference adapter exists for plain callables but is flagged
as non-certifying because differencing noise can push coefficients past the
unit bound spuriously.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .pwl import PWL1D

MultiIndex = tuple[int, ...]


class SmoothFunctionOracle:
    """Callable with exact partial derivatives on [0, 1]^d.

    ``order`` is the smoothness the caller claims (membership in the unit
    ball of W^{order,inf}); derivatives up to ``order - 1`` must be exact.
    """

    certifying = True

    def __init__(self, d: int, order: int):
        if d < 1 or order < 1:
            raise ParameterError("dimension and order must be positive")
        self.d = d
        self.order = order

    def eval(self, x) -> float:
        raise NotImplementedError

    def deriv(self, alpha: MultiIndex, x) -> float:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return self.eval(x)

    def _check_alpha(self, alpha: MultiIndex) -> None:
        if len(alpha) != self.d or any(a < 0 for a in alpha):
            raise ParameterError(f"bad multi-index {alpha} for dimension {self.d}")


class ZeroOracle(SmoothFunctionOracle):
    def eval(self, x) -> float:
        return 0.0

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)
        return 0.0


class LinearOracle(SmoothFunctionOracle):
    """f(x) = sum(c_k x_k) + b."""

    def __init__(self, d: int, order: int, coeffs: Sequence[float], const: float = 0.0):
        super().__init__(d, order)
        if len(coeffs) != d:
            raise ParameterError("one coefficient per coordinate")
        self.coeffs = [float(c) for c in coeffs]
        self.const = float(const)

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(np.dot(self.coeffs, x) + self.const)

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)
        total = sum(alpha)
        if total == 0:
            return self.eval(x)
        if total == 1:
            return self.coeffs[alpha.index(1)]
        return 0.0


class SineOracle(SmoothFunctionOracle):
    """f(x) = amplitude * sin(omega x); derivatives shift the phase."""

    def __init__(self, order: int, omega: float = math.pi,
                 amplitude: float | None = None):
        super().__init__(1, order)
        self.omega = float(omega)
        # default amplitude puts the function in the unit Sobolev ball
        self.amplitude = float(amplitude) if amplitude is not None else self.omega ** (-order)

    def eval(self, x) -> float:
        x = float(np.asarray(x).ravel()[0])
        return self.amplitude * math.sin(self.omega * x)

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)
        k = alpha[0]
        x = float(np.asarray(x).ravel()[0])
        return self.amplitude * self.omega**k * math.sin(self.omega * x + k * math.pi / 2.0)


class PolynomialOracle(SmoothFunctionOracle):
    """Univariate polynomial with exact derivatives."""

    def __init__(self, order: int, coeffs: Sequence[float]):
        super().__init__(1, order)
        self.poly = np.polynomial.Polynomial(list(coeffs))

    def eval(self, x) -> float:
        return float(self.poly(float(np.asarray(x).ravel()[0])))

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)
        return float(self.poly.deriv(alpha[0])(float(np.asarray(x).ravel()[0])))


class SeparableQuadraticOracle(SmoothFunctionOracle):
    """f(x) = scale * sum(x_k^2)."""

    def __init__(self, d: int, order: int, scale: float = 0.25):
        super().__init__(d, order)
        self.scale = float(scale)

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return self.scale * float(np.sum(x * x))

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)
        x = np.asarray(x, dtype=float).ravel()
        total = sum(alpha)
        if total == 0:
            return self.eval(x)
        if total == 1:
            return 2.0 * self.scale * float(x[alpha.index(1)])
        if total == 2 and 2 in alpha:
            return 2.0 * self.scale
        return 0.0


class FiniteDifferenceOracle(SmoothFunctionOracle):
    """Central-difference adapter for plain callables (step h, O(h^2) error).

    Not certifying: difference noise may spuriously violate the coefficient
    bound, so strict-mode builds should not rely on it.
    """

    certifying = False

    def __init__(self, f: Callable, d: int, order: int, step: float = 1e-4):
        super().__init__(d, order)
        self.f = f
        self.step = float(step)

    def eval(self, x) -> float:
        return float(self.f(np.asarray(x, dtype=float).ravel()))

    def deriv(self, alpha, x) -> float:
        self._check_alpha(alpha)

        def rec(remaining: list[int], point: np.ndarray) -> float:
            for k, times in enumerate(remaining):
                if times > 0:
                    lower = remaining.copy()
                    lower[k] -= 1
                    up = point.copy()
                    up[k] += self.step
                    dn = point.copy()
                    dn[k] -= self.step
                    return (rec(lower, up) - rec(lower, dn)) / (2.0 * self.step)
            return float(self.f(point))

        return rec(list(alpha), np.asarray(x, dtype=float).ravel().copy())


# -- Lipschitz targets for the adaptive construction ---------------------------


def hat_function(x: float) -> float:
    return min(x, 1.0 - x)


def slow_sine(x: float) -> float:
    return math.sin(2.0 * math.pi * x) / (2.0 * math.pi)


def random_lipschitz_pwl(n_breakpoints: int = 500, seed: int = 20240) -> PWL1D:
    """Random Lipschitz-1 piecewise-linear function on [0, 1] with |f| <= 1."""
    rng = np.random.default_rng(seed)
    x = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, n_breakpoints - 2)), [1.0]])
    x = np.unique(x)
    slopes = rng.uniform(-1.0, 1.0, x.size - 1)
    y = np.concatenate([[0.0], np.cumsum(slopes * np.diff(x))])
    return PWL1D(x, y)


# -- registries used by the CLI and the service --------------------------------


def sobolev_oracle(name: str, d: int, order: int) -> SmoothFunctionOracle:
    name = name.lower()
    if name == "zero":
        return ZeroOracle(d, order)
    if name == "linear":
        return LinearOracle(d, order, [1.0 / d] * d)
    if name == "sine":
        if d != 1:
            raise ParameterError("the sine target is univariate")
        return SineOracle(order)
    if name == "poly":
        if d != 1:
            raise ParameterError("the poly target is univariate")
        return PolynomialOracle(order, [0.0, 0.5, -0.5])
    if name == "bowl":
        return SeparableQuadraticOracle(d, order, scale=0.25)
    raise ParameterError(f"unknown sobolev target {name!r}")


def analysis_target(name: str, input_dim: int) -> Callable:
    """Vectorized reference function for error measurement."""
    name = name.lower()
    if input_dim == 2:
        if name == "product":
            return lambda pts: np.asarray(pts)[:, 0] * np.asarray(pts)[:, 1]
        if name == "linear":
            return lambda pts: np.asarray(pts).mean(axis=1)
        if name == "zero":
            return lambda pts: np.zeros(np.asarray(pts).shape[0])
        raise ParameterError(f"unknown 2-input target {name!r}")
    if name == "square":
        return lambda x: np.asarray(x) ** 2
    if name == "sine":
        o = SineOracle(2)
        return lambda x: np.vectorize(o.eval)(np.asarray(x))
    if name in ("sine2pi", "minmax", "zero", "linear", "randompwl"):
        f = lipschitz_target(name)
        return lambda x: np.vectorize(f)(np.asarray(x))
    raise ParameterError(f"unknown target {name!r}")


def lipschitz_target(name: str) -> Callable[[float], float]:
    name = name.lower()
    if name == "minmax":
        return hat_function
    if name in ("sine", "sine2pi"):
        return slow_sine
    if name == "zero":
        return lambda x: 0.0
    if name == "linear":
        return lambda x: x - 0.5
    if name == "randompwl":
        return random_lipschitz_pwl().eval
    raise ParameterError(f"unknown lipschitz target {name!r}")
