"""Measurement report shared by every builder and the analysis harness."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .network import ComplexityMetrics


@dataclass
class ApproxReport:
    """One construction's parameters, measured error and size.

    The error is a maximum over a finite grid, hence a lower estimate of the
    true supremum; ``grid`` records the grid so the number means something.
    """

    builder: str
    params: dict
    measured_error: float
    grid: str
    metrics: ComplexityMetrics
    wall_ms: float
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "builder": self.builder,
            "params": self.params,
            "measured_error": self.measured_error,
            "grid": self.grid,
            "metrics": self.metrics.to_dict(),
            "wall_ms": self.wall_ms,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(data: dict) -> "ApproxReport":
        return ApproxReport(
            builder=data["builder"],
            params=data["params"],
            measured_error=data["measured_error"],
            grid=data["grid"],
            metrics=ComplexityMetrics(**data["metrics"]),
            wall_ms=data["wall_ms"],
            extra=data.get("extra", {}),
        )

    @staticmethod
    def from_json(text: str) -> "ApproxReport":
        return ApproxReport.from_json_dict(json.loads(text))


def uniform_grid_1d(lo: float = 0.0, hi: float = 1.0, n: int = 10_001) -> np.ndarray:
    return np.linspace(lo, hi, n)


def uniform_grid(d: int, per_axis: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """(per_axis**d, d) array covering [lo, hi]^d uniformly."""
    axes = [np.linspace(lo, hi, per_axis) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def default_grid(d: int) -> np.ndarray:
    """Measurement defaults: 10001 points for d=1, 201 (41) per axis for d=2 (3)."""
    if d == 1:
        return uniform_grid_1d()
    if d == 2:
        return uniform_grid(2, 201)
    if d == 3:
        return uniform_grid(3, 41)
    raise ValueError(f"no default grid for dimension {d}")
