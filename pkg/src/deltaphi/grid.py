"""Sampled scalar functions on the invariant interval."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ValidationError
from .io import read_csv, write_csv


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``values`` on a strictly increasing ``grid``.

    Off-grid evaluation uses ``func`` when the function is known in closed
    form, and a monotone cubic (PCHIP) interpolant of the samples otherwise.
    """

    grid: np.ndarray
    values: np.ndarray
    func: Optional[Callable] = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if grid.size < 2 or grid.shape != values.shape:
            raise ValidationError("grid function needs >= 2 points and matching value array")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid function values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func: Callable, grid) -> "GridFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(func(grid), dtype=float), func)

    @cached_property
    def _interp(self):
        if self.grid.size < 3:
            return lambda t: np.interp(t, self.grid, self.values)
        return PchipInterpolator(self.grid, self.values, extrapolate=True)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self.func(t_arr) if self.func is not None else self._interp(t_arr)
        out = np.asarray(out, dtype=float)
        return float(out) if t_arr.ndim == 0 else out

    def lipschitz_norm(self) -> float:
        return lipschitz_norm(self)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def spans(self, t_minus: float, t_plus: float, tol: float = 1e-12) -> bool:
        scale = max(1.0, abs(t_plus - t_minus))
        return abs(self.grid[0] - t_minus) <= tol * scale and abs(self.grid[-1] - t_plus) <= tol * scale

    def to_csv(self, path):
        return write_csv(path, ("t", "value"), zip(self.grid, self.values))

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        header, data = read_csv(path)
        if header[:2] != ["t", "value"]:
            raise ValidationError(f"{path}: expected header 't,value', got {','.join(header)!r}")
        return cls(data[:, 0], data[:, 1])


def lipschitz_norm(f: GridFunction) -> float:
    """Largest divided difference between adjacent samples.

    Exact for the piecewise-linear interpolant of the samples; a lower
    estimate of the Lipschitz constant of any other interpolant.
    """
    return float(np.max(np.abs(np.diff(f.values) / np.diff(f.grid))))
