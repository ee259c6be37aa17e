"""Perturbation fields, the non-uniform shift ``t -> t + alpha*phi(t)`` and its orbits.

A :class:`ShiftMap` always works in *normalised* coordinates in which
``alpha > 0`` and ``phi > 0`` strictly inside ``[t_minus, t_plus]``; orbits then
run from the repelling endpoint ``t_minus`` to the attracting endpoint
``t_plus``.  When the user-supplied pair has ``alpha*phi < 0`` the interval is
reflected ``t -> t_minus + t_plus - t`` (and/or ``phi`` and ``alpha`` are both
negated), and :meth:`ShiftMap.to_working` / :meth:`ShiftMap.from_working` map
between user and working coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    AmplitudeTooLarge,
    DegeneratePerturbation,
    EndpointMismatch,
    InteriorZero,
    NoConvergence,
    OutOfDomain,
    ValidationError,
)

DerivFn = Callable[[np.ndarray, int], np.ndarray]


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _restore(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class PerturbationField:
    """The perturbation ``phi`` on the interval between two consecutive zeros.

    ``derivs(t, j)`` returns the ``j``-th derivative (``j = 0`` is ``phi``
    itself) for ``0 <= j <= p_max``; it must accept numpy arrays.
    """

    derivs: DerivFn
    p_max: int
    t_minus: float
    t_plus: float
    lip_norm: float
    name: str = "custom"
    approximate: bool = False
    params: dict = dc_field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.t_plus > self.t_minus:
            raise ValidationError("need t_minus < t_plus")
        if self.p_max < 2:
            raise ValidationError("a perturbation field needs derivatives up to order >= 2")
        if not (self.lip_norm > 0 and math.isfinite(self.lip_norm)):
            raise ValidationError("lip_norm must be positive and finite")

    def __call__(self, t):
        arr, scalar = _as_array(t)
        return _restore(np.asarray(self.derivs(arr, 0), dtype=float), scalar)

    def derivative(self, t, j: int = 1):
        if j > self.p_max:
            raise ValidationError(f"field {self.name!r} supplies derivatives only up to order {self.p_max}")
        arr, scalar = _as_array(t)
        return _restore(np.asarray(self.derivs(arr, j), dtype=float), scalar)

    @property
    def length(self) -> float:
        return self.t_plus - self.t_minus


# ---------------------------------------------------------------------------
# Built-in fields

# derivatives of sin without the rounding in sin(t + j*pi/2)
_SIN_CYCLE = (np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t))


def sine_field() -> PerturbationField:
    """``phi = sin`` on ``[0, pi]``."""

    def derivs(t, j):
        return _SIN_CYCLE[j % 4](np.asarray(t, dtype=float))

    return PerturbationField(derivs, 64, 0.0, math.pi, 1.0, name="sine")


def scaled_sine_field(omega: float) -> PerturbationField:
    """``phi = sin(omega t) / omega`` on ``[0, pi/omega]``; ``||phi||_Lip = 1``."""
    omega = float(omega)
    if omega <= 0:
        raise ValidationError("omega must be positive")

    def derivs(t, j):
        return omega ** (j - 1) * _SIN_CYCLE[j % 4](omega * np.asarray(t, dtype=float))

    return PerturbationField(derivs, 64, 0.0, math.pi / omega, 1.0,
                             name="scaled_sine", params={"omega": omega})


def bump_field(length: float = math.pi, q: Sequence[float] = (1.0,)) -> PerturbationField:
    """Polynomial bump ``t (L - t) q(t)`` on ``[0, L]``; ``q`` given by ascending coefficients."""
    length = float(length)
    poly = Polynomial([0.0, length, -1.0]) * Polynomial(list(q))
    polys = [poly]
    for _ in range(poly.degree() + 1):
        polys.append(polys[-1].deriv())

    def derivs(t, j):
        t = np.asarray(t, dtype=float)
        if j < len(polys):
            return polys[j](t)
        return np.zeros_like(t)

    # exact sup|phi'|: endpoints and interior critical points of phi'
    cands = [0.0, length]
    for r in polys[2].roots():
        if abs(r.imag) < 1e-12 and 0.0 <= r.real <= length:
            cands.append(r.real)
    lip = float(np.max(np.abs(polys[1](np.array(cands)))))
    return PerturbationField(derivs, 64, 0.0, length, lip, name="bump",
                             params={"length": length, "q": list(map(float, q))})


def sampled_field(t: Sequence[float], values: Sequence[float]) -> PerturbationField:
    """Field from samples, interpolated by a monotone (PCHIP) cubic.

    Derivatives come from the interpolant's finite-difference slopes, so the
    field is flagged ``approximate``; orders above 3 vanish identically.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != values.shape or t.size < 4:
        raise ValidationError("sampled field needs matching 1-D arrays with >= 4 points")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("sample grid must be strictly increasing")
    interp = PchipInterpolator(t, values, extrapolate=True)
    ders = [interp] + [interp.derivative(j) for j in (1, 2, 3)]

    def derivs(x, j):
        x = np.asarray(x, dtype=float)
        if j <= 3:
            return ders[j](x)
        return np.zeros_like(x)

    dense = np.linspace(t[0], t[-1], 16 * t.size)
    lip = float(np.max(np.abs(ders[1](dense))))
    return PerturbationField(derivs, 3, float(t[0]), float(t[-1]), lip,
                             name="sampled", approximate=True)


def reflect_field(fld: PerturbationField) -> PerturbationField:
    """``psi(s) = -phi(t_minus + t_plus - s)``, the field seen in reflected coordinates."""
    c = fld.t_minus + fld.t_plus

    def derivs(s, j):
        return -((-1.0) ** j) * np.asarray(fld.derivs(c - np.asarray(s, dtype=float), j))

    return PerturbationField(derivs, fld.p_max, fld.t_minus, fld.t_plus, fld.lip_norm,
                             name=fld.name, approximate=fld.approximate, params=fld.params)


def negate_field(fld: PerturbationField) -> PerturbationField:
    def derivs(s, j):
        return -np.asarray(fld.derivs(s, j))

    return PerturbationField(derivs, fld.p_max, fld.t_minus, fld.t_plus, fld.lip_norm,
                             name=fld.name, approximate=fld.approximate, params=fld.params)


# ---------------------------------------------------------------------------
# Non-degeneracy

@dataclass(frozen=True)
class NondegeneracyCertificate:
    endpoint_values: tuple
    endpoint_slopes: tuple
    taylor_constant: float
    tol: float
    passed: bool = True


def _probe_grid(a, b, n=128):
    # Chebyshev-Lobatto points cluster near both endpoints
    k = np.arange(n + 1)
    return 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * k / n)


def validate_nondegeneracy(fld: PerturbationField, tol: float = 1e-12,
                           n_probe: int = 128) -> NondegeneracyCertificate:
    """Check simple zeros at the endpoints, no interior zero, quadratic Taylor remainder."""
    if n_probe < 64:
        raise ValidationError("probe grid needs at least 64 points")
    a, b = fld.t_minus, fld.t_plus
    vals = (float(fld(a)), float(fld(b)))
    slopes = (float(fld.derivative(a, 1)), float(fld.derivative(b, 1)))
    for end, v in zip((a, b), vals):
        if abs(v) > tol:
            raise EndpointMismatch(f"|phi({end:.17g})| = {abs(v):.3e} exceeds tol {tol:.1e}")
    for end, s in zip((a, b), slopes):
        if abs(s) < 10 * tol:
            raise DegeneratePerturbation(f"phi'({end:.17g}) = {s:.3e} vanishes: zero is not simple")

    grid = _probe_grid(a, b, n_probe)[1:-1]
    inner = np.asarray(fld(grid))
    hit = np.flatnonzero(np.abs(inner) <= tol)
    if hit.size:
        raise InteriorZero(f"phi vanishes inside the interval at t={grid[hit[0]]:.17g}")
    flips = np.flatnonzero(np.sign(inner[:-1]) != np.sign(inner[1:]))
    if flips.size:
        i = flips[0]
        t0 = brentq(lambda x: float(fld(x)), grid[i], grid[i + 1])
        raise InteriorZero(f"phi vanishes inside the interval at t={t0:.17g}")

    # |phi(t) - phi'(t*)(t - t*)| / (t - t*)^2 on geometrically shrinking distances
    dist = 0.25 * (b - a) * 0.5 ** np.arange(21)
    worst = 0.0
    for end, v, s, sign in ((a, vals[0], slopes[0], 1.0), (b, vals[1], slopes[1], -1.0)):
        tt = end + sign * dist
        ratio = np.abs(np.asarray(fld(tt)) - v - s * (tt - end)) / dist ** 2
        outer, innermost = ratio[:10], ratio[10:]
        if not np.all(np.isfinite(ratio)) or innermost.max() > 4 * outer.max() + 1e-6:
            raise DegeneratePerturbation(
                f"Taylor remainder at t={end:.17g} is not O((t - t*)^2)")
        worst = max(worst, float(ratio.max()))
    return NondegeneracyCertificate(vals, slopes, worst, tol)


# ---------------------------------------------------------------------------
# Shift map

@dataclass(frozen=True)
class ShiftMap:
    """``Phi = id + alpha*phi`` in working coordinates (``alpha > 0``, ``phi > 0``)."""

    field: PerturbationField
    alpha: float
    orientation: int = 1
    signed_alpha: Optional[float] = None
    source_field: Optional[PerturbationField] = dc_field(default=None, compare=False, repr=False)

    @classmethod
    def build(cls, fld: PerturbationField, alpha: float) -> "ShiftMap":
        """Normalise ``(phi, alpha)`` so that downstream code sees ``alpha*phi > 0``."""
        alpha = float(alpha)
        if alpha == 0 or not math.isfinite(alpha):
            raise ValidationError("alpha must be a non-zero finite number")
        alpha_max = 1.0 / fld.lip_norm
        if abs(alpha) >= alpha_max:
            raise AmplitudeTooLarge(
                f"|alpha| = {abs(alpha):.6g} violates |alpha| < alpha_phi = 1/||phi||_Lip = {alpha_max:.6g}")
        mid = 0.5 * (fld.t_minus + fld.t_plus)
        work, orientation = fld, 1
        if alpha * float(fld(mid)) < 0:
            work, orientation = reflect_field(fld), -1
        if alpha < 0:
            work = negate_field(work)
        return cls(work, abs(alpha), orientation, alpha, fld)

    @property
    def t_minus(self) -> float:
        return self.field.t_minus

    @property
    def t_plus(self) -> float:
        return self.field.t_plus

    @property
    def length(self) -> float:
        return self.field.length

    @property
    def alpha_max(self) -> float:
        return 1.0 / self.field.lip_norm

    @property
    def domain_tol(self) -> float:
        return 1e-12 * max(1.0, self.length)

    def to_working(self, t):
        """User coordinates -> working coordinates (an involution)."""
        if self.orientation == 1:
            return t
        c = self.t_minus + self.t_plus
        if np.ndim(t):
            return c - np.asarray(t, dtype=float)
        return c - float(t)

    from_working = to_working

    def raw(self, t):
        """Unchecked, unclipped ``t + alpha*phi(t)`` on arrays."""
        return t + self.alpha * np.asarray(self.field.derivs(t, 0))

    def slope(self, t):
        return 1.0 + self.alpha * np.asarray(self.field.derivs(t, 1))

    def _check_domain(self, t):
        tol = self.domain_tol
        if np.any(t < self.t_minus - tol) or np.any(t > self.t_plus + tol) or np.any(np.isnan(t)):
            bad = t[(t < self.t_minus - tol) | (t > self.t_plus + tol) | np.isnan(t)]
            raise OutOfDomain(f"t={bad.flat[0]!r} outside [{self.t_minus!r}, {self.t_plus!r}]")
        return np.clip(t, self.t_minus, self.t_plus)

    def __call__(self, t):
        return eval_shift(self, t)


def eval_shift(smap: ShiftMap, t):
    """``Phi(t) = t + alpha*phi(t)``, clamped to the invariant interval."""
    arr, scalar = _as_array(t)
    arr = smap._check_domain(arr)
    out = np.clip(smap.raw(arr), smap.t_minus, smap.t_plus)
    return _restore(out, scalar)


def invert_shift(smap: ShiftMap, y, tol: float = 1e-12, max_iter: int = 100):
    """Solve ``Phi(t) = y`` by Newton's method safeguarded with bisection.

    ``Phi`` is increasing with ``Phi(t_minus) = t_minus`` and ``Phi(t_plus) =
    t_plus``, so ``[t_minus, t_plus]`` always brackets the root.  After the
    residual falls below ``tol`` two more Newton steps and a one-ulp polish
    bring the result to machine precision.
    """
    arr, scalar = _as_array(y)
    arr = smap._check_domain(arr)
    y = arr.reshape(-1)
    lo = np.full_like(y, smap.t_minus)
    hi = np.full_like(y, smap.t_plus)
    x = np.clip(y - smap.alpha * np.asarray(smap.field.derivs(y, 0)), lo, hi)
    done = np.zeros(y.shape, dtype=bool)
    extra = np.zeros(y.shape, dtype=int)
    for _ in range(max_iter):
        f = smap.raw(x) - y
        ok = np.abs(f) <= tol
        extra[ok] += 1
        done = extra >= 3
        if done.all():
            break
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        step = f / smap.slope(x)
        xn = x - step
        bad = ~((xn >= lo) & (xn <= hi)) | ~np.isfinite(xn)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
    else:
        f = smap.raw(x) - y
        if np.any(np.abs(f) > tol):
            worst = float(np.max(np.abs(f)))
            raise NoConvergence(f"invert_shift: residual {worst:.3e} after {max_iter} iterations")
    # one-ulp polish: prefer a neighbour that reproduces y exactly
    best = x
    best_err = np.abs(smap.raw(x) - y)
    for cand in (np.nextafter(x, -np.inf), np.nextafter(x, np.inf)):
        cand = np.clip(cand, smap.t_minus, smap.t_plus)
        err = np.abs(smap.raw(cand) - y)
        take = err < best_err
        best = np.where(take, cand, best)
        best_err = np.where(take, err, best_err)
    best = np.clip(best, smap.t_minus, smap.t_plus)
    return _restore(best.reshape(arr.shape), scalar)


@dataclass(frozen=True)
class Orbit:
    base: float
    k_min: int
    points: np.ndarray

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.points) - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def __getitem__(self, k: int) -> float:
        if not self.k_min <= k <= self.k_max:
            raise IndexError(k)
        return float(self.points[k - self.k_min])

    def __len__(self):
        return len(self.points)


def orbit(smap: ShiftMap, t0: float, k_min: int, k_max: int, tol: float = 1e-12) -> Orbit:
    """Points ``Phi^k t0`` for ``k_min <= k <= k_max`` (negative ``k`` via the inverse)."""
    if k_min > 0 or k_max < 0:
        raise ValidationError("need k_min <= 0 <= k_max")
    t0 = float(smap._check_domain(np.asarray(float(t0))))
    fwd = [t0]
    for _ in range(k_max):
        fwd.append(eval_shift(smap, fwd[-1]))
    bwd = []
    cur = t0
    for _ in range(-k_min):
        cur = invert_shift(smap, cur, tol)
        bwd.append(cur)
    pts = np.array(bwd[::-1] + fwd, dtype=float)
    return Orbit(t0, k_min, pts)
