"""Explicit constants certifying convergence of the series inverse and bounding it.

The ladder runs ``delta -> E_phi -> eps_phi -> m_phi -> N_alpha -> V_phi, K_1 ->
K_phi``; every entry is a closed formula except ``E_phi`` (a Lipschitz bound for
the envelope functions) which is measured on a probe grid.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .errors import AmplitudeTooLarge, DegeneratePerturbation, InvalidDelta, TrapezoidViolation
from .io import format_csv, format_record
from .shift import PerturbationField, ShiftMap, _probe_grid

DEFAULT_DELTA = 0.1
E_PHI_SAFETY = 1.25
N_PROBE = 2048


def envelope_functions(fld: PerturbationField, t):
    """Return ``(E_minus(t), E_plus(t))`` with ``phi(t) = phi'(t*)(1 + E)(t - t*)``.

    The removable singularity at the matching endpoint is filled with 0.
    """
    t = np.asarray(t, dtype=float)
    out = []
    for end in (fld.t_minus, fld.t_plus):
        slope = float(fld.derivative(end, 1))
        if slope == 0.0:
            raise DegeneratePerturbation(f"phi'({end!r}) = 0")
        d = t - end
        safe = np.where(d == 0.0, 1.0, d)
        e = (np.asarray(fld.derivs(t, 0)) - float(fld(end))) / (slope * safe) - 1.0
        out.append(np.where(d == 0.0, 0.0, e))
    if t.ndim == 0:
        return float(out[0]), float(out[1])
    return out[0], out[1]


def measure_e_phi(fld: PerturbationField, n_probe: int = N_PROBE, safety: float = E_PHI_SAFETY) -> float:
    grid = _probe_grid(fld.t_minus, fld.t_plus, n_probe)
    em, ep = envelope_functions(fld, grid)
    dt = np.diff(grid)
    lip = max(np.max(np.abs(np.diff(em) / dt)), np.max(np.abs(np.diff(ep) / dt)))
    return safety * float(lip)


@dataclass(frozen=True)
class ConstantsReport:
    delta: float
    E_phi: float
    eps_phi: float
    m_phi: float
    phi_prime_inf: float
    alpha_max: float
    N_alpha: int
    V_phi: float
    K_1: float
    K_phi: float
    K_phi_branch: str
    alpha: float
    lip_norm: float
    t_minus: float
    t_plus: float
    field: str = "custom"
    approximate_derivatives: bool = False
    # the hypothesis |alpha| < (1-delta)/phi'_inf < 1/||phi||_Lip as literally stated;
    # only |alpha| < 1/||phi||_Lip is enforced
    stated_alpha_chain_holds: bool = False

    @property
    def length(self) -> float:
        return self.t_plus - self.t_minus

    @property
    def V_1(self) -> float:
        """Geometric-sum constant valid once both points are within ``eps_phi`` of ``t_plus``."""
        return 1.0 / (self.alpha * self.phi_prime_inf * (1 - 2 * self.delta))

    @property
    def tail_factor(self) -> float:
        """``1 / (|alpha| (1-delta) phi'_inf)``: one-sided sum bound per unit ``||w||_Lip * distance``."""
        return 1.0 / (self.alpha * (1 - self.delta) * self.phi_prime_inf)

    @property
    def bilateral_factor(self) -> float:
        """Bound on ``|sum_k w(Phi^k t)|`` per unit ``||w||_Lip``."""
        return (2 * self.tail_factor + self.N_alpha) * self.length

    def as_dict(self) -> dict:
        return asdict(self)

    def to_record(self) -> str:
        return format_record(self.as_dict())


def compute_constants(smap: ShiftMap, delta: float = DEFAULT_DELTA,
                      n_probe: int = N_PROBE, safety: float = E_PHI_SAFETY) -> ConstantsReport:
    if not 0.0 < delta < 0.5:
        raise InvalidDelta(f"delta = {delta!r} must lie in (0, 1/2)")
    fld = smap.field
    alpha = abs(smap.alpha)
    alpha_max = 1.0 / fld.lip_norm
    if alpha >= alpha_max:
        raise AmplitudeTooLarge(f"|alpha| = {alpha:.6g} >= alpha_phi = {alpha_max:.6g}")
    length = fld.length

    e_phi = measure_e_phi(fld, n_probe, safety)
    eps = min(delta / e_phi if e_phi > 0 else math.inf, 0.25 * length * (1 - 1e-9))
    slopes = (abs(float(fld.derivative(fld.t_minus, 1))), abs(float(fld.derivative(fld.t_plus, 1))))
    phi_inf = min(slopes)
    if phi_inf == 0.0:
        raise DegeneratePerturbation("an endpoint slope vanishes")
    m_phi = phi_inf * eps * (1 - delta)
    n_alpha = math.ceil((length - 2 * eps) / (alpha * m_phi)) + 1
    growth = n_alpha * math.log1p(alpha * fld.lip_norm)
    v_phi = 2 * math.exp(growth) / (alpha * phi_inf * (1 - 2 * delta)) if growth < 700 else math.inf
    k_1 = (2 + 2 * eps + alpha * n_alpha * (1 - delta) * phi_inf) / (
        alpha * (1 - delta) * phi_inf * (length - 2 * eps))
    k_phi, branch = (k_1, "K_1") if k_1 >= v_phi else (v_phi, "V_phi")
    chain = alpha < (1 - delta) / phi_inf < 1.0 / fld.lip_norm
    return ConstantsReport(
        delta=float(delta), E_phi=e_phi, eps_phi=eps, m_phi=m_phi, phi_prime_inf=phi_inf,
        alpha_max=alpha_max, N_alpha=int(n_alpha), V_phi=v_phi, K_1=k_1, K_phi=k_phi,
        K_phi_branch=branch, alpha=alpha, lip_norm=fld.lip_norm, t_minus=fld.t_minus,
        t_plus=fld.t_plus, field=fld.name, approximate_derivatives=fld.approximate,
        stated_alpha_chain_holds=bool(chain),
    )


def trapezoid(report: ConstantsReport, t):
    """Piecewise-linear lower envelope of ``phi``: ramps of slope ``phi'_inf(1-delta)`` capped at ``m_phi``."""
    t = np.asarray(t, dtype=float)
    h = np.minimum(np.minimum(t - report.t_minus, report.t_plus - t), report.eps_phi)
    return report.phi_prime_inf * (1 - report.delta) * np.maximum(h, 0.0)


def trapezoid_check(smap: ShiftMap, report: ConstantsReport, grid) -> float:
    """Verify ``phi >= trapezoid`` on ``grid``; returns the smallest slack."""
    grid = np.asarray(grid, dtype=float)
    phi = np.asarray(smap.field.derivs(grid, 0))
    slack = phi - trapezoid(report, grid)
    floor = -1e-14 * max(1.0, float(np.max(np.abs(phi))))
    bad = np.flatnonzero(slack < floor)
    if bad.size:
        t = float(grid[bad[0]])
        raise TrapezoidViolation(
            f"phi({t:.17g}) below the trapezoid by {-slack[bad[0]]:.3e}; E_phi underestimated", t=t)
    return float(slack.min())


@dataclass(frozen=True)
class ScalingRow:
    alpha: float
    N_alpha: int
    V_phi: float
    K_1: float
    K_phi: float
    alpha_K_phi: float

    @property
    def branch(self) -> str:
        return "K_1" if self.K_1 >= self.V_phi else "V_phi"


SCALING_HEADER = ("alpha", "N_alpha", "V_phi", "K_1", "K_phi", "alpha_K_phi")


def scaling_study(fld: PerturbationField, delta: float, alphas: Iterable[float]) -> List[ScalingRow]:
    rows = []
    for a in alphas:
        rep = compute_constants(ShiftMap.build(fld, a), delta)
        rows.append(ScalingRow(float(a), rep.N_alpha, rep.V_phi, rep.K_1, rep.K_phi, abs(a) * rep.K_phi))
    return rows


def scaling_csv(rows: Sequence[ScalingRow]) -> str:
    return format_csv(SCALING_HEADER, [
        (r.alpha, r.N_alpha, r.V_phi, r.K_1, r.K_phi, r.alpha_K_phi) for r in rows])
