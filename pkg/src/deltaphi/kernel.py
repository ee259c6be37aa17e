"""Bounded kernel elements of ``Delta_Phi`` built from seeds on a fundamental domain.

Any bounded seed on ``[t0, Phi t0)`` extends to the whole open interval by
``v(t) = seed(Phi^k t)`` with ``k`` chosen so that ``Phi^k t`` lands in the
fundamental domain.  Seeds here are piecewise constant on half-open cells,
so the extension satisfies ``v(Phi t) = v(t)`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import ConstantsReport, compute_constants
from .errors import OrbitExhausted, ValidationError
from .io import format_csv
from .shift import ShiftMap, eval_shift, invert_shift


@dataclass(frozen=True, eq=False)
class KernelElement:
    t0: float
    t1: float  # Phi(t0), right end of the fundamental domain
    seed: Callable[[np.ndarray], np.ndarray]
    seed_kind: str
    seed_min: float
    seed_max: float

    @property
    def seed_oscillation(self) -> float:
        return self.seed_max - self.seed_min


def _domain(smap: ShiftMap, t0: float):
    t0 = float(t0)
    if not smap.t_minus < t0 < smap.t_plus:
        raise ValidationError("t0 must lie strictly inside the interval")
    t1 = eval_shift(smap, t0)
    if not t1 > t0:
        raise ValidationError("empty fundamental domain: Phi(t0) <= t0")
    return t0, t1


def constant_element(smap: ShiftMap, t0: float, c: float = 1.0) -> KernelElement:
    t0, t1 = _domain(smap, t0)
    c = float(c)
    return KernelElement(t0, t1, lambda x: np.full(np.shape(x), c), "constant", c, c)


def step_element(smap: ShiftMap, t0: float, left: float = 1.0, right: float = 0.0,
                 split: float = 0.5) -> KernelElement:
    """Seed ``left`` on the first ``split`` fraction of ``[t0, Phi t0)`` and ``right`` after it."""
    t0, t1 = _domain(smap, t0)
    cut = t0 + split * (t1 - t0)
    left, right = float(left), float(right)

    def seed(x):
        return np.where(np.asarray(x) < cut, left, right)

    return KernelElement(t0, t1, seed, "step", min(left, right), max(left, right))


def sampled_element(smap: ShiftMap, t0: float, grid: Sequence[float],
                    values: Sequence[float]) -> KernelElement:
    """Seed ``values[i]`` on the cell ``[grid[i], grid[i+1])``; the last cell ends at ``Phi t0``."""
    t0, t1 = _domain(smap, t0)
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or grid.size < 1:
        raise ValidationError("seed grid and values must be matching 1-D arrays")
    if abs(grid[0] - t0) > 1e-12 * max(1.0, abs(t0)) or np.any(np.diff(grid) <= 0) or grid[-1] >= t1:
        raise ValidationError("seed grid must start at t0, increase, and stay below Phi(t0)")
    grid = grid.copy()
    grid[0] = t0

    def seed(x):
        idx = np.searchsorted(grid, np.asarray(x), side="right") - 1
        return values[np.clip(idx, 0, len(values) - 1)]

    return KernelElement(t0, t1, seed, "sampled", float(values.min()), float(values.max()))


def function_element(smap: ShiftMap, t0: float, func: Callable, lo: float, hi: float,
                     kind: str = "function") -> KernelElement:
    """Seed given by an arbitrary bounded ``func`` with known range ``[lo, hi]``."""
    t0, t1 = _domain(smap, t0)
    return KernelElement(t0, t1, func, kind, float(lo), float(hi))


def seed_from_csv(smap: ShiftMap, t0: float, path) -> KernelElement:
    from .io import read_csv

    _, data = read_csv(path)
    return sampled_element(smap, t0, data[:, 0], data[:, 1])


def _walk_cap(smap, report):
    if report is None:
        report = compute_constants(smap)
    return 10 * report.N_alpha + 10_000


def landing_points(smap: ShiftMap, elem: KernelElement, t, report: Optional[ConstantsReport] = None):
    """Return ``(k, Phi^k t)`` with ``Phi^k t`` in ``[t0, Phi t0)``."""
    t = np.asarray(t, dtype=float)
    shape = t.shape
    x = t.reshape(-1).copy()
    if np.any(x <= smap.t_minus) or np.any(x >= smap.t_plus):
        raise ValidationError("kernel elements are evaluated strictly inside the interval")
    k = np.zeros(x.shape, dtype=np.int64)
    cap = _walk_cap(smap, report)
    for _ in range(cap):
        low = x < elem.t0
        if not low.any():
            break
        x[low] = smap.raw(x[low])
        k[low] += 1
    else:
        d = float(np.max(x[x < elem.t0]) - smap.t_minus)
        raise OrbitExhausted(f"forward walk did not reach t0 within {cap} steps", distance=d)
    for _ in range(cap):
        high = x >= elem.t1
        if not high.any():
            break
        x[high] = invert_shift(smap, x[high])
        k[high] -= 1
    else:
        d = float(smap.t_plus - np.min(x[x >= elem.t1]))
        raise OrbitExhausted(f"backward walk did not reach Phi(t0) within {cap} steps", distance=d)
    # rounding can leave a point a hair outside the half-open domain; the seam
    # value is defined by seed(Phi t0) = seed(t0)
    x = np.where(x < elem.t0, elem.t0, x)
    return k.reshape(shape), x.reshape(shape)


def kernel_eval(smap: ShiftMap, elem: KernelElement, t, report: Optional[ConstantsReport] = None):
    t_arr = np.asarray(t, dtype=float)
    _, x = landing_points(smap, elem, t_arr, report)
    out = np.asarray(elem.seed(x), dtype=float)
    return float(out) if t_arr.ndim == 0 else out


def verify_invariance(smap: ShiftMap, elem: KernelElement, probes,
                      report: Optional[ConstantsReport] = None) -> float:
    """``max |v(Phi t) - v(t)|`` over the probes."""
    probes = np.asarray(probes, dtype=float)
    here = kernel_eval(smap, elem, probes, report)
    there = kernel_eval(smap, elem, eval_shift(smap, probes), report)
    return float(np.max(np.abs(np.asarray(there) - np.asarray(here))))


def oscillation_profile(smap: ShiftMap, elem: KernelElement, endpoint: str, radii: Sequence[float],
                        n_samples: int = 1000, report: Optional[ConstantsReport] = None):
    """``sup - inf`` of ``v`` on ``(t_end - r, t_end)`` (or ``(t_end, t_end + r)``) for each radius."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be positive and strictly decreasing")
    if report is not None and max(radii) >= report.eps_phi:
        raise ValidationError(f"radii must stay below eps_phi = {report.eps_phi:.6g}")
    if endpoint in ("plus", "t_plus", "+"):
        end, sign = smap.t_plus, -1.0
    elif endpoint in ("minus", "t_minus", "-"):
        end, sign = smap.t_minus, 1.0
    else:
        raise ValidationError(f"endpoint must be 'minus' or 'plus', got {endpoint!r}")
    u = (np.arange(n_samples) + 0.5) / n_samples
    out = []
    for r in radii:
        vals = kernel_eval(smap, elem, end + sign * r * u, report)
        out.append((r, float(np.max(vals) - np.min(vals))))
    return out


def oscillation_csv(profile) -> str:
    return format_csv(("radius", "oscillation"), profile)
