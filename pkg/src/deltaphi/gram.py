"""Gram matrix of the warped sine modes ``e_k(t) = sin(k Phi(t))`` for ``phi = sin`` on ``[0, pi]``.

Under ``u = Phi(t)`` the modes become ``sin(k u)``, so with the Jacobian
weight ``1 + alpha cos t`` the Gram matrix is exactly ``(pi/2) I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import UnsupportedField, ValidationError
from .io import format_csv

MAX_MODES = 64
WEIGHTS = ("jacobian", "sigma")


@dataclass(frozen=True, eq=False)
class GramResult:
    alpha: float
    weight: str
    matrix: np.ndarray

    @property
    def max_offdiag(self) -> float:
        g = self.matrix
        return float(np.max(np.abs(g - np.diag(np.diag(g))))) if g.shape[0] > 1 else 0.0

    @property
    def max_diag_error(self) -> float:
        return float(np.max(np.abs(np.diag(self.matrix) - np.pi / 2)))

    @property
    def max_identity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - np.pi / 2 * np.eye(self.matrix.shape[0]))))

    def to_csv(self) -> str:
        n = self.matrix.shape[0]
        header = ["j"] + [f"k{k}" for k in range(1, n + 1)]
        return format_csv(header, [(j + 1, *row) for j, row in enumerate(self.matrix)])


def gram_matrix(alpha: float, modes: int, weight: str = "jacobian", field_name: str = "sin",
                epsabs: float = 1e-13, epsrel: float = 1e-13) -> GramResult:
    """``G_jk = int_0^pi e_j e_k w dt`` by adaptive quadrature.

    ``weight="jacobian"`` uses ``1 + alpha cos t``; ``weight="sigma"`` uses its
    reciprocal, for comparison.
    """
    if field_name != "sin":
        raise UnsupportedField(f"the Gram demonstration is defined for phi = sin only, got {field_name!r}")
    if not 1 <= modes <= MAX_MODES:
        raise ValidationError(f"modes must lie in [1, {MAX_MODES}]")
    if not abs(alpha) < 1:
        raise ValidationError(f"|alpha| = {abs(alpha):.6g} >= alpha_phi = 1")
    if weight not in WEIGHTS:
        raise ValidationError(f"weight must be one of {WEIGHTS}")
    a = float(alpha)

    def w(t):
        jac = 1.0 + a * np.cos(t)
        return jac if weight == "jacobian" else 1.0 / jac

    g = np.empty((modes, modes))
    limit = 50 + 10 * modes
    for j in range(1, modes + 1):
        for k in range(j, modes + 1):
            f = lambda t, j=j, k=k: np.sin(j * (t + a * np.sin(t))) * np.sin(k * (t + a * np.sin(t))) * w(t)
            val, _ = quad(f, 0.0, np.pi, epsabs=epsabs, epsrel=epsrel, limit=limit)
            g[j - 1, k - 1] = g[k - 1, j - 1] = val
    return GramResult(a, weight, g)
