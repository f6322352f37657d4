"""Exact algebra for continuous piecewise-linear functions of one variable.

A ``PWL1D`` is the linear interpolant through a strictly increasing sequence
of breakpoints covering a closed interval.  Because sums, compositions and
differences of such functions are again piecewise linear, every operation
here is exact up to float rounding: suprema are taken over breakpoints, not
sampled.  This makes the class usable as an independent oracle for checking
network constructions.
"""
from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainMismatchError, ParameterError, RangeError

# Two adjacent segments are merged when their slopes agree to this relative
# tolerance; piece counting is brittle under float noise otherwise.
SLOPE_MERGE_RTOL = 1e-12


class PWL1D:
    """Continuous piecewise-linear function on a closed interval.

    Immutable; all operations return new instances.  ``x`` is strictly
    increasing, ``x[0]``/``x[-1]`` are the domain endpoints, and the function
    linearly interpolates the pairs ``(x[i], y[i])``.
    """

    __slots__ = ("x", "y")

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x_arr = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        if x_arr.ndim != 1 or x_arr.shape != y_arr.shape:
            raise ParameterError("breakpoints and values must be 1-D and equally long")
        if x_arr.size < 2:
            raise ParameterError("need at least two breakpoints")
        if not np.all(np.diff(x_arr) > 0):
            raise ParameterError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(y_arr))):
            raise ParameterError("breakpoints and values must be finite")
        self.x = x_arr
        self.y = y_arr
        self.x.setflags(write=False)
        self.y.setflags(write=False)

    # -- basic queries ----------------------------------------------------

    @property
    def lo(self) -> float:
        return float(self.x[0])

    @property
    def hi(self) -> float:
        return float(self.x[-1])

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def same_domain(self, other: "PWL1D") -> bool:
        return self.lo == other.lo and self.hi == other.hi

    def slopes(self) -> np.ndarray:
        """Slope of every segment, in breakpoint order."""
        return np.diff(self.y) / np.diff(self.x)

    def value_range(self) -> tuple[float, float]:
        return (float(self.y.min()), float(self.y.max()))

    def __call__(self, x):
        return self.eval(x)

    def __repr__(self) -> str:
        return f"PWL1D([{self.lo}, {self.hi}], {self.x.size} breakpoints)"

    # -- evaluation --------------------------------------------------------

    def eval(self, x):
        """Evaluate at a scalar or array of points inside the domain.

        Exact at breakpoints.  Points outside the domain raise.
        """
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < self.lo) or np.any(x_arr > self.hi):
            bad = x_arr[(x_arr < self.lo) | (x_arr > self.hi)]
            raise ParameterError(
                f"point {float(np.atleast_1d(bad)[0])!r} outside domain [{self.lo}, {self.hi}]"
            )
        out = np.interp(x_arr, self.x, self.y)
        if np.isscalar(x) or x_arr.ndim == 0:
            return float(out)
        return out

    # -- canonicalization --------------------------------------------------

    def simplified(self) -> "PWL1D":
        """Drop interior breakpoints whose adjacent slopes agree.

        Slopes are compared with relative tolerance ``SLOPE_MERGE_RTOL``.
        """
        if self.x.size == 2:
            return self
        s = self.slopes()
        left, right = s[:-1], s[1:]
        scale = np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
        keep_interior = np.abs(right - left) > SLOPE_MERGE_RTOL * scale
        mask = np.concatenate(([True], keep_interior, [True]))
        if mask.all():
            return self
        return PWL1D(self.x[mask], self.y[mask])

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "domain": [self.lo, self.hi],
            "x": [float(v) for v in self.x],
            "y": [float(v) for v in self.y],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "PWL1D":
        f = PWL1D(data["x"], data["y"])
        dom = data.get("domain")
        if dom is not None and (f.lo != dom[0] or f.hi != dom[1]):
            raise ParameterError("domain field disagrees with breakpoints")
        return f

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json(text: str) -> "PWL1D":
        return PWL1D.from_json_dict(json.loads(text))


# -- constructors ------------------------------------------------------------


def pwl_constant(value: float, lo: float = 0.0, hi: float = 1.0) -> PWL1D:
    return PWL1D([lo, hi], [value, value])


def pwl_identity(lo: float = 0.0, hi: float = 1.0) -> PWL1D:
    return PWL1D([lo, hi], [lo, hi])


def pwl_interpolate(f: Callable[[float], float], breakpoints: Sequence[float]) -> PWL1D:
    """Interpolant of ``f`` through the given sorted breakpoints."""
    x = np.asarray(breakpoints, dtype=float)
    if x.size < 2:
        raise ParameterError("need at least two breakpoints")
    if not np.all(np.diff(x) > 0):
        raise ParameterError("breakpoints must be sorted and free of duplicates")
    y = np.array([float(f(float(v))) for v in x])
    return PWL1D(x, y)


# -- operations ---------------------------------------------------------------


def pwl_eval(f: PWL1D, x):
    return f.eval(x)


def pwl_linear_combine(
    terms: Iterable[tuple[float, PWL1D]], bias: float = 0.0
) -> PWL1D:
    """Exact weighted sum ``sum(c * f) + bias`` of functions on one domain.

    The result's breakpoints are the union of the inputs' breakpoints with
    collinear neighbors merged.
    """
    term_list = list(terms)
    if not term_list:
        raise ParameterError("need at least one term")
    first = term_list[0][1]
    for _, f in term_list[1:]:
        if not f.same_domain(first):
            raise DomainMismatchError(
                f"domains differ: {f.domain} vs {first.domain}"
            )
    grid = np.unique(np.concatenate([f.x for _, f in term_list]))
    values = np.full(grid.shape, float(bias))
    for c, f in term_list:
        if c != 0.0:
            values = values + c * np.interp(grid, f.x, f.y)
    return PWL1D(grid, values).simplified()


def pwl_compose(outer: PWL1D, inner: PWL1D, range_slack: float = 1e-9) -> PWL1D:
    """Exact composition ``outer(inner(x))``.

    Breakpoints are the inner function's breakpoints plus every preimage of
    an outer breakpoint under the inner function.  The inner range must lie
    inside the outer domain (up to ``range_slack`` absorbing float dust).
    """
    vmin, vmax = inner.value_range()
    slack = range_slack * max(1.0, abs(outer.lo), abs(outer.hi))
    if vmin < outer.lo - slack or vmax > outer.hi + slack:
        raise RangeError(
            f"inner range [{vmin}, {vmax}] not contained in outer domain "
            f"[{outer.lo}, {outer.hi}]"
        )
    points = [inner.x]
    ix, iy = inner.x, inner.y
    x0, x1 = ix[:-1], ix[1:]
    y0, y1 = iy[:-1], iy[1:]
    dy = y1 - y0
    for b in outer.x:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (b - y0) / dy
        hit = (dy != 0) & (t > 0.0) & (t < 1.0)
        if np.any(hit):
            points.append(x0[hit] + t[hit] * (x1[hit] - x0[hit]))
    grid = np.unique(np.concatenate(points))
    inner_vals = np.clip(np.interp(grid, ix, iy), outer.lo, outer.hi)
    values = np.interp(inner_vals, outer.x, outer.y)
    return PWL1D(grid, values).simplified()


def pwl_sup_distance(f: PWL1D, h: PWL1D) -> float:
    """Exact uniform distance between two functions on one domain.

    The difference is piecewise linear, so the supremum is attained at a
    breakpoint of the union grid.
    """
    if not f.same_domain(h):
        raise DomainMismatchError(f"domains differ: {f.domain} vs {h.domain}")
    grid = np.unique(np.concatenate([f.x, h.x]))
    diff = np.interp(grid, f.x, f.y) - np.interp(grid, h.x, h.y)
    return float(np.max(np.abs(diff)))


def pwl_piece_count(f: PWL1D) -> int:
    """Number of maximal intervals of constant slope."""
    s = f.slopes()
    if s.size == 1:
        return 1
    left, right = s[:-1], s[1:]
    scale = np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
    changes = np.abs(right - left) > SLOPE_MERGE_RTOL * scale
    return int(np.count_nonzero(changes)) + 1


def pwl_sup_error_vs_quadratic(f: PWL1D, a: float, b: float, c: float) -> float:
    """Exact supremum of ``|a x^2 + b x + c - f(x)|`` over the domain of f.

    On each linear piece the error is a quadratic, so its extremum is either
    at the piece endpoints or at the interior stationary point.
    """
    x0, x1 = f.x[:-1], f.x[1:]
    y0, y1 = f.y[:-1], f.y[1:]
    slope = (y1 - y0) / (x1 - x0)

    def err_at(x, xa, ya, s):
        return np.abs(a * x * x + b * x + c - (ya + s * (x - xa)))

    best = max(float(np.max(err_at(x0, x0, y0, slope))),
               float(np.max(err_at(x1, x0, y0, slope))))
    if a != 0.0:
        xs = (slope - b) / (2.0 * a)
        inside = (xs > x0) & (xs < x1)
        if np.any(inside):
            interior = err_at(xs[inside], x0[inside], y0[inside], slope[inside])
            best = max(best, float(np.max(interior)))
    return best


# -- reference shapes ---------------------------------------------------------


def tooth_pwl() -> PWL1D:
    """The unit tooth: 2x up to 1/2, then back down to 0 at 1."""
    return PWL1D([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])


def sawtooth_pwl(s: int) -> PWL1D:
    """s-fold composition of the tooth with itself: 2**(s-1) teeth on [0, 1]."""
    if s < 1:
        raise ParameterError("s must be >= 1")
    g = tooth_pwl()
    result = g
    for _ in range(s - 1):
        result = pwl_compose(g, result)
    return result
