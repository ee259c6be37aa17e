"""Derivative jets of the iterates ``Phi^k`` and the ``C^p`` bound on the inverse.

The state ``U_k = (t_k, s_k, r_k, q_k, ...)`` collects ``Phi^k t`` and its
first ``p`` derivatives in ``t``.  One step of the triangular map ``F`` is the
chain rule for ``Phi o Phi^k``; for arbitrary ``p`` it is carried out as a
composition of truncated Taylor series.  Backward jets compose the Taylor
series of ``Phi^{-1}``, obtained from that of ``Phi`` by series reversion.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .constants import ConstantsReport, compute_constants
from .errors import ContractionNotFound, GridTooCoarse, OrderUnsupported, ValidationError
from .grid import GridFunction
from .io import format_csv, format_record
from .shift import ShiftMap, invert_shift


@dataclass(frozen=True, eq=False)
class JetState:
    order: int
    t: float
    jet: np.ndarray  # (s, r, q, ...) = d^j/dt^j Phi^k, j = 1..order

    def __post_init__(self):
        jet = np.asarray(self.jet, dtype=float).reshape(-1)
        if jet.size != self.order or self.order < 1:
            raise ValidationError("jet length must equal the order p >= 1")
        object.__setattr__(self, "jet", jet)

    @classmethod
    def identity(cls, t: float, order: int) -> "JetState":
        jet = np.zeros(order)
        jet[0] = 1.0
        return cls(order, float(t), jet)

    def deviation(self, t_fixed: float) -> float:
        """``|U - U_fixed|`` in the l1 norm, ``U_fixed = (t_fixed, 0, ..., 0)``."""
        return abs(self.t - t_fixed) + float(np.sum(np.abs(self.jet)))

    @property
    def jet_norm(self) -> float:
        return float(np.sum(np.abs(self.jet)))


# ---------------------------------------------------------------------------
# truncated power series on batches: arrays of shape (n, p+1), column j = coefficient of h^j

def _mul(a, b, p):
    out = np.zeros_like(a)
    for i in range(p + 1):
        out[:, i:] += a[:, i:i + 1] * b[:, :p + 1 - i]
    return out


def _compose(outer, inner, p):
    """``sum_i outer[:, i] * inner^i`` for inner series with zero constant term."""
    out = np.zeros_like(inner)
    out[:, 0] = outer[:, 0]
    power = np.zeros_like(inner)
    power[:, 0] = 1.0
    for i in range(1, p + 1):
        power = _mul(power, inner, p)
        out += outer[:, i:i + 1] * power
    return out


def _revert(b, p):
    """Coefficients ``c`` of ``u(h)`` with ``sum_i b_i u^i = h`` (``b_0`` ignored, ``b_1 != 0``)."""
    c = np.zeros_like(b)
    c[:, 1] = 1.0 / b[:, 1]
    for n in range(2, p + 1):
        trial = c.copy()
        lhs = np.zeros_like(b)
        power = np.zeros_like(b)
        power[:, 0] = 1.0
        for i in range(1, n + 1):
            power = _mul(power, trial, p)
            lhs += b[:, i:i + 1] * power
        c[:, n] = -lhs[:, n] / b[:, 1]
    return c


_FACT = [math.factorial(j) for j in range(32)]


def _to_coeffs(jets):
    p = jets.shape[1]
    out = np.zeros((jets.shape[0], p + 1))
    out[:, 1:] = jets / np.array(_FACT[1:p + 1])
    return out


def _to_jets(coeffs):
    p = coeffs.shape[1] - 1
    return coeffs[:, 1:] * np.array(_FACT[1:p + 1])


def _shift_series(smap, x, p):
    """Taylor coefficients of ``Phi`` at ``x`` up to order ``p`` (constant term ``Phi(x)``)."""
    fld = smap.field
    out = np.empty((x.size, p + 1))
    out[:, 0] = smap.raw(x)
    for i in range(1, p + 1):
        out[:, i] = smap.alpha * np.asarray(fld.derivs(x, i)) / _FACT[i]
    out[:, 1] += 1.0
    return out


def _check_order(smap, p):
    if p < 1:
        raise ValidationError("order p must be >= 1")
    if smap.field.p_max < p + 1:
        raise OrderUnsupported(
            f"order p={p} needs phi derivatives up to {p + 1}; field supplies {smap.field.p_max}")


def _step_batch(smap, t, jets):
    p = jets.shape[1]
    outer = _shift_series(smap, t, p)
    comp = _compose(outer, _to_coeffs(jets), p)
    return np.clip(outer[:, 0], smap.t_minus, smap.t_plus), _to_jets(comp)


def _back_step_batch(smap, t, jets):
    p = jets.shape[1]
    x = np.asarray(invert_shift(smap, t))
    inv = _revert(_shift_series(smap, x, p), p)
    comp = _compose(inv, _to_coeffs(jets), p)
    return x, _to_jets(comp)


def jet_step(smap: ShiftMap, state: JetState) -> JetState:
    """One application of ``F``: jet of ``Phi o Phi^k`` from the jet of ``Phi^k``."""
    _check_order(smap, state.order)
    t, jets = _step_batch(smap, np.array([state.t]), state.jet[None, :])
    return JetState(state.order, float(t[0]), jets[0])


def jet_step_explicit(smap: ShiftMap, state: JetState) -> JetState:
    """Hand-expanded recurrence for ``p <= 3``: (s, r, q) updated by the chain rule."""
    if state.order > 3:
        raise OrderUnsupported("explicit recurrence only covers p <= 3")
    _check_order(smap, state.order)
    fld, a, t = smap.field, smap.alpha, state.t
    d1, d2, d3 = (float(fld.derivative(t, j)) for j in (1, 2, 3))
    jet = np.concatenate([state.jet, np.zeros(3 - state.order)])
    s, r, q = jet
    g = 1.0 + a * d1
    new = np.array([
        g * s,
        g * r + a * d2 * s * s,
        g * q + 3 * a * d2 * s * r + a * d3 * s ** 3,
    ])
    t_new = min(max(t + a * float(fld(t)), smap.t_minus), smap.t_plus)
    return JetState(state.order, t_new, new[:state.order])


def propagate(smap: ShiftMap, t0: float, p: int, k_max: int) -> List[JetState]:
    """Trajectory ``U_0, ..., U_{k_max}`` from the identity jet at ``t0``."""
    _check_order(smap, p)
    if k_max < 0:
        raise ValidationError("k_max must be >= 0; use propagate_backward for negative k")
    state = JetState.identity(t0, p)
    out = [state]
    t, jets = np.array([state.t]), state.jet[None, :]
    for _ in range(k_max):
        t, jets = _step_batch(smap, t, jets)
        out.append(JetState(p, float(t[0]), jets[0].copy()))
    return out


def propagate_backward(smap: ShiftMap, t0: float, p: int, k_max: int) -> List[JetState]:
    """Trajectory ``U_0, U_{-1}, ..., U_{-k_max}`` (jets of ``Phi^{-k}``)."""
    _check_order(smap, p)
    state = JetState.identity(t0, p)
    out = [state]
    t, jets = np.array([state.t]), state.jet[None, :]
    for _ in range(k_max):
        t, jets = _back_step_batch(smap, t, jets)
        out.append(JetState(p, float(t[0]), jets[0].copy()))
    return out


def trajectory_csv(states: List[JetState], k_start: int = 0, step: int = 1) -> str:
    p = states[0].order
    names = ["s", "r", "q"] + [f"d{j}" for j in range(4, p + 1)]
    header = ["k", "t"] + names[:p]
    rows = [(k_start + step * i, st.t, *st.jet) for i, st in enumerate(states)]
    return format_csv(header, rows)


# ---------------------------------------------------------------------------
# contraction near the fixed points U_{+inf} (sink) and U_{-inf} (source)

@dataclass(frozen=True)
class ContractionResult:
    eta: float
    eps_jet: float
    eta_backward: float
    eigenvalue_plus: float
    eigenvalue_minus: float


def _samples(rng, n, p, eps):
    dirs = rng.standard_normal((n, p + 1))
    dirs /= np.sum(np.abs(dirs), axis=1, keepdims=True)
    axes = np.vstack([np.eye(p + 1), -np.eye(p + 1)])
    dirs = np.vstack([dirs, axes])
    scale = eps * np.concatenate([rng.uniform(0.05, 1.0, n), np.full(len(axes), 0.999)])
    dev = dirs * scale[:, None]
    dev[:, 0] = np.abs(dev[:, 0])
    return dev


def _ratios(smap, dev, end, sign, p):
    """Forward-step ratios of full and jet-only l1 deviations from ``(end, 0...0)``."""
    t = end + sign * dev[:, 0]
    jets = dev[:, 1:]
    t_new, jets_new = _step_batch(smap, t, jets)
    full_before = np.abs(t - end) + np.sum(np.abs(jets), axis=1)
    full_after = np.abs(t_new - end) + np.sum(np.abs(jets_new), axis=1)
    jb = np.sum(np.abs(jets), axis=1)
    ja = np.sum(np.abs(jets_new), axis=1)
    nz = jb > 0
    return full_before, full_after, jb[nz], ja[nz]


def contraction_check(smap: ShiftMap, p: int, delta: float = 0.1,
                      report: Optional[ConstantsReport] = None, n_samples: int = 256,
                      seed: int = 0, max_halvings: int = 30) -> ContractionResult:
    """Measure ``eta`` with ``|F(U) - U+| <= (1 - eta)|U - U+|`` near the sink.

    Radii start at ``eps_phi`` and are halved until both the forward
    contraction near ``U_{+inf}`` and the backward contraction near
    ``U_{-inf}`` hold, then further while ``eta`` still improves by more than
    1%.  ``eta_backward`` is the matching margin for
    ``|U - U-| <= (1 - eta)|F(U) - U-|``.
    """
    _check_order(smap, p)
    if report is None:
        report = compute_constants(smap, delta)
    rng = np.random.default_rng(seed)
    eps = report.eps_phi
    best = None
    for _ in range(max_halvings):
        dev = _samples(rng, n_samples, p, eps)
        fb, fa, jb, ja = _ratios(smap, dev, smap.t_plus, -1.0, p)
        ratio = max(np.max(fa / fb), np.max(ja / jb) if ja.size else 0.0)
        eta_f = 1.0 - ratio
        bb, ba, kb, ka = _ratios(smap, dev, smap.t_minus, 1.0, p)
        back = max(np.max(bb / ba), np.max(kb / ka) if ka.size else 0.0)
        eta_b = 1.0 - back
        cur = (float(eta_f), eps, float(eta_b))
        if best is not None:
            if eta_f <= best[0] * 1.01:
                break
            best = cur
        elif eta_f > 0 and eta_b > 0:
            best = cur
        eps *= 0.5
    if best is None:
        raise ContractionNotFound(
            f"no positive contraction margin down to radius {eps:.3e}; |alpha| too large for order {p}")
    lam_plus = 1.0 + smap.alpha * float(smap.field.derivative(smap.t_plus, 1))
    lam_minus = 1.0 + smap.alpha * float(smap.field.derivative(smap.t_minus, 1))
    return ContractionResult(best[0], best[1], best[2], lam_plus, lam_minus)


# ---------------------------------------------------------------------------
# C^p bound

@dataclass(frozen=True)
class CpReport:
    p: int
    eta: float
    eta_backward: float
    eps_jet: float
    N_K: int
    sum_bound: float
    forward_sum_bound: float
    backward_sum_bound: float
    composition_constant: float
    sup_factor: float
    K_cp: float
    alpha: float

    def as_dict(self) -> dict:
        return asdict(self)

    def to_record(self) -> str:
        return format_record(self.as_dict())


def _bell_total(absjets):
    """``sum_{m=1}^p B_m(|x_1|, ..., |x_m|)`` with ``B_m`` the complete Bell polynomials."""
    n, p = absjets.shape
    bell = [np.ones(n)]
    for m in range(p):
        acc = np.zeros(n)
        for i in range(m + 1):
            acc += math.comb(m, i) * bell[m - i] * absjets[:, i]
        bell.append(acc)
    return np.sum(bell[1:], axis=0)


def _directional_sums(smap, t0, p, eps_jet, eta, end, stepper, cap):
    """Per-probe ``(sum_{j<N}|U^_j| + |U^_N|/eta, N, max Bell ratio)`` along one direction."""
    n = t0.size
    t = t0.copy()
    jets = np.zeros((n, p))
    jets[:, 0] = 1.0
    first = np.full(n, -1)
    history = []
    comp = 0.0
    for k in range(cap):
        norm = np.sum(np.abs(jets), axis=1)
        comp = max(comp, float(np.max(_bell_total(np.abs(jets)) / np.where(norm > 0, norm, 1.0))))
        history.append(norm)
        dev = np.abs(t - end) + norm
        first = np.where((first < 0) & (dev < eps_jet), k, first)
        if np.all(first >= 0):
            break
        t, jets = stepper(smap, t, jets)
    else:
        raise ContractionNotFound(f"jet trajectories did not enter radius {eps_jet:.3e} within {cap} steps")
    n_k = int(first.max())
    hist = np.array(history)  # (n_k + 1, n)
    return n_k, hist, comp


def cp_bound(smap: ShiftMap, p: int, report: Optional[ConstantsReport] = None,
             contraction: Optional[ContractionResult] = None, n_probes: int = 33) -> CpReport:
    """Certify ``||Delta_Phi^{-1} w||_p <= (K_cp / |alpha|) ||w||_p`` on a probe set.

    ``sum_bound`` bounds ``sum_j |U^_j|`` (l1 norm of the derivative part of
    the jet) for forward orbits and, symmetrically, for backward orbits.  The
    composition constant turns jet sums into derivative sums through the
    complete Bell polynomials of Faa di Bruno's formula; the function values
    themselves are bounded with the bilateral-sum constant.
    """
    if report is None:
        report = compute_constants(smap)
    if contraction is None:
        contraction = contraction_check(smap, p, report.delta, report)
    eps = report.eps_phi
    t0 = np.linspace(smap.t_minus + eps, smap.t_plus - eps, n_probes)
    cap = 50 * report.N_alpha + 100_000
    eta, eta_b, eps_jet = contraction.eta, contraction.eta_backward, contraction.eps_jet

    n_f, hist_f, comp_f = _directional_sums(smap, t0, p, eps_jet, eta, smap.t_plus, _step_batch, cap)
    fwd = np.sum(hist_f[:n_f], axis=0) + hist_f[n_f] / eta
    n_b, hist_b, comp_b = _directional_sums(smap, t0, p, eps_jet, eta_b, smap.t_minus, _back_step_batch, cap)
    # backward sums start at U_{-1}
    bwd = np.sum(hist_b[1:n_b], axis=0) + hist_b[n_b] / eta_b
    fwd_bound, bwd_bound = float(fwd.max()), float(bwd.max())
    sum_bound = max(fwd_bound, bwd_bound)
    comp = max(comp_f, comp_b)
    sup_factor = report.bilateral_factor
    k_cp = smap.alpha * (sup_factor + comp * sum_bound)
    return CpReport(p, eta, eta_b, eps_jet, max(n_f, n_b), sum_bound, fwd_bound, bwd_bound,
                    comp, sup_factor, k_cp, smap.alpha)


def cp_norm(f: GridFunction, p: int) -> float:
    """``sup_t sum_{j<=p} |f^(j)(t)|`` with derivatives by repeated second-order differences.

    An estimator: accurate to O(h^2) for smooth ``f`` on fine grids.
    """
    if p < 0:
        raise ValidationError("p must be >= 0")
    if f.grid.size < 2 * p + 1 or f.grid.size < 3:
        raise GridTooCoarse(f"order {p} needs at least {max(2 * p + 1, 3)} grid points")
    total = np.abs(f.values).copy()
    d = f.values
    for _ in range(p):
        d = np.gradient(d, f.grid, edge_order=2)
        total += np.abs(d)
    return float(np.max(total))
