"""Logarithmic radial mesh and sampled radial profiles."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError


@dataclass(frozen=True)
class RadialGrid:
    """Geometrically spaced nodes ``r_min = r_0 < ... < r_{n-1} = r_max``.

    The nodes are uniform in ``s = log r`` with spacing ``h``.
    """

    r_min: float = 1e-4
    r_max: float = 20.0
    n_points: int = 4096

    def __post_init__(self):
        if not (0.0 < self.r_min < 1.0 < self.r_max):
            raise InvalidSpecError(
                f"need 0 < r_min < 1 < r_max, got r_min={self.r_min}, r_max={self.r_max}"
            )
        if self.n_points < 64:
            raise InvalidSpecError(f"n_points must be >= 64, got {self.n_points}")

    @classmethod
    def decades(cls, lo_exp: float, hi_exp: float, per_decade: int) -> "RadialGrid":
        """Grid on ``[10**lo_exp, 10**hi_exp]`` with nodes on ``10**(j/per_decade)``.

        Grids built this way with the same ``per_decade`` are nested.
        """
        n = int(round((hi_exp - lo_exp) * per_decade)) + 1
        return cls(10.0**lo_exp, 10.0**hi_exp, n)

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(np.log(self.r_min), np.log(self.r_max), self.n_points)

    @property
    def h(self) -> float:
        return (np.log(self.r_max) - np.log(self.r_min)) / (self.n_points - 1)

    @property
    def r_half(self) -> np.ndarray:
        """Cell interfaces ``exp(s_i + h/2)``, length ``n_points - 1``."""
        s = self.s
        return np.exp(0.5 * (s[1:] + s[:-1]))

    def trapezoid_weights(self) -> np.ndarray:
        """Weights ``w`` with ``sum(w * f) ~ int f(r) dr`` (trapezoid in ``s``)."""
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w * self.r

    def volume_weights(self) -> np.ndarray:
        """Weights for ``int f(|x|) dx`` over the shell ``r_min < |x| < r_max``."""
        return 4.0 * np.pi * self.r**2 * self.trapezoid_weights()

    def nearest_index(self, radius: float) -> int:
        if not (self.r_min <= radius <= self.r_max):
            raise InvalidSpecError(f"radius {radius} outside grid [{self.r_min}, {self.r_max}]")
        return int(np.argmin(np.abs(self.s - np.log(radius))))

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Same interval, ``factor`` times more cells (nodes nested)."""
        return RadialGrid(self.r_min, self.r_max, factor * (self.n_points - 1) + 1)

    def describe(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max, "n_points": self.n_points,
                "spacing": "logarithmic"}


@dataclass
class RadialFunction:
    """Values of a radial profile on a :class:`RadialGrid` for angular mode ``l``."""

    grid: RadialGrid
    values: np.ndarray
    l: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise InvalidSpecError(
                f"values has shape {self.values.shape}, grid has {self.grid.n_points} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidSpecError("radial function has non-finite values")

    @classmethod
    def sample(cls, grid: RadialGrid, func, l: int = 0, **metadata) -> "RadialFunction":
        return cls(grid, np.asarray(func(grid.r), dtype=float) * np.ones(grid.n_points), l,
                   dict(metadata))

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def __call__(self, radius):
        """Interpolate linearly in ``log r``; power laws are interpolated in log-log."""
        radius = np.asarray(radius, dtype=float)
        s = np.log(radius)
        v = self.values
        if np.all(v > 0):
            return np.exp(np.interp(s, self.grid.s, np.log(v)))
        return np.interp(s, self.grid.s, v)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "value"])
        for r, v in zip(self.grid.r, self.values):
            writer.writerow([f"{r:.17g}", f"{v:.17g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path, grid: RadialGrid, l: int = 0) -> "RadialFunction":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        values = np.array([float(row["value"]) for row in rows])
        r = np.array([float(row["r"]) for row in rows])
        if r.shape != grid.r.shape or not np.allclose(r, grid.r, rtol=1e-12):
            raise InvalidSpecError(f"{path}: radii do not match the supplied grid")
        return cls(grid, values, l)
