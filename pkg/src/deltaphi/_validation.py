"""Input checking and name resolution shared by the estimator and the CLI."""
from __future__ import annotations

import math
from typing import Callable, Mapping, Union

import numpy as np

from .errors import ValidationError
from .shift import (
    PerturbationField,
    bump_field,
    sampled_field,
    scaled_sine_field,
    sine_field,
    validate_nondegeneracy,
)

FieldSpec = Union[str, Mapping, PerturbationField]


def check_grid(X, name: str = "X", min_points: int = 2) -> np.ndarray:
    """Accept a 1-D array or an ``(n, 1)`` column; return a strictly increasing 1-D float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D or a single column, got shape {np.shape(X)}")
    if arr.size < min_points:
        raise ValidationError(f"{name} needs at least {min_points} points")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if np.any(np.diff(arr) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return arr


def check_points(X, name: str = "X") -> np.ndarray:
    """Like :func:`check_grid` without the ordering requirement."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be a finite 1-D array or single column")
    return arr


def check_values(y, n: int, name: str = "y") -> np.ndarray:
    arr = np.asarray(y, dtype=float).reshape(-1)
    if arr.size != n:
        raise ValidationError(f"{name} has {arr.size} values for {n} grid points")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_delta(delta) -> float:
    delta = float(delta)
    if not 0.0 < delta < 0.5:
        raise ValidationError(f"delta = {delta!r} must lie in (0, 1/2)")
    return delta


def check_tol(tol) -> float:
    tol = float(tol)
    if not (tol > 0 and math.isfinite(tol)):
        raise ValidationError(f"tol = {tol!r} must be a positive number")
    return tol


def resolve_field(spec: FieldSpec, validate: bool = True) -> PerturbationField:
    """Build a field from a name (``"sin"``), a mapping with ``name`` and parameters, or a field.

    Mappings may also carry ``csv`` (a path with columns ``t,phi``) for a sampled field.
    """
    if isinstance(spec, PerturbationField):
        fld = spec
    elif isinstance(spec, str):
        fld = _named_field(spec, {})
    elif isinstance(spec, Mapping):
        params = dict(spec)
        if "csv" in params:
            from .io import read_csv

            _, data = read_csv(params["csv"])
            fld = sampled_field(data[:, 0], data[:, 1])
        else:
            name = params.pop("name", None)
            if name is None:
                raise ValidationError("field mapping needs a 'name' or a 'csv' entry")
            fld = _named_field(str(name), params)
    else:
        raise ValidationError(f"cannot interpret field specification {spec!r}")
    if validate:
        validate_nondegeneracy(fld)
    return fld


def _named_field(name: str, params: dict) -> PerturbationField:
    key = name.lower()
    try:
        if key in ("sin", "sine"):
            return sine_field()
        if key in ("scaled_sine", "scaled_sin"):
            return scaled_sine_field(params.get("omega", 1.0))
        if key == "bump":
            return bump_field(params.get("length", math.pi), params.get("q", (1.0,)))
    except TypeError as exc:
        raise ValidationError(f"bad parameters for field {name!r}: {exc}") from None
    raise ValidationError(f"unknown field {name!r}; expected sin, scaled_sine, bump or a csv path")


# -- test functions --------------------------------------------------------

def _v0_library(a: float, b: float) -> Mapping[str, Callable]:
    length = b - a
    mid = 0.5 * (a + b)
    return {
        "cos": np.cos,
        "square": lambda t: np.asarray(t, dtype=float) ** 2,
        "identity": lambda t: np.asarray(t, dtype=float),
        "damped_sin3": lambda t: np.sin(3 * t) * (t - a) * (b - t) / length ** 2,
        "hat": lambda t: np.maximum(0.0, 1.0 - np.abs(np.asarray(t, dtype=float) - mid) / (0.5 * length)),
        "zero": lambda t: np.zeros(np.shape(t)),
    }


V0_NAMES = ("cos", "square", "identity", "damped_sin3", "hat", "zero")
RAW_NAMES = ("sin2", "one", "zero", "alpha_sin")


def v0_function(name: str, fld: PerturbationField) -> Callable:
    lib = _v0_library(fld.t_minus, fld.t_plus)
    if name not in lib:
        raise ValidationError(f"unknown v0 {name!r}; expected one of {', '.join(V0_NAMES)}")
    return lib[name]


def telescoped(v0: Callable, fld: PerturbationField, alpha: float) -> Callable:
    """``w = v0 o Phi - v0`` evaluated directly in user coordinates."""
    def w(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(v0(t + alpha * np.asarray(fld.derivs(t, 0))), dtype=float) - np.asarray(v0(t), dtype=float)
    return w


def raw_function(name: str, fld: PerturbationField, alpha: float) -> Callable:
    if name == "sin2":
        return lambda t: np.sin(2 * np.asarray(t, dtype=float))
    if name == "one":
        return lambda t: np.ones(np.shape(t))
    if name == "zero":
        return lambda t: np.zeros(np.shape(t))
    if name == "alpha_sin":
        return lambda t: alpha * np.asarray(fld.derivs(np.asarray(t, dtype=float), 0))
    raise ValidationError(f"unknown raw generator {name!r}; expected one of {', '.join(RAW_NAMES)}")


def w_source(source: str, fld: PerturbationField, alpha: float) -> Callable:
    """Resolve ``"telescope:<v0>"`` or ``"raw:<name>"`` to a callable ``w``."""
    kind, _, name = str(source).partition(":")
    if kind == "telescope":
        return telescoped(v0_function(name, fld), fld, alpha)
    if kind == "raw":
        return raw_function(name, fld, alpha)
    raise ValidationError(f"w source {source!r} must look like 'telescope:<v0>' or 'raw:<name>'")
