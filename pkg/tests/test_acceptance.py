"""Acceptance criteria, each checked at its stated tolerance.

Every test records a ``criterion`` label and the measured quantity; the
session summary prints one PASS/FAIL line per criterion.
"""
import math
import time

import mpmath as mp
import numpy as np
import pytest

from deltaphi import (
    GridFunction,
    ShiftMap,
    check_solvability,
    compute_constants,
    constant_element,
    contraction_check,
    cp_bound,
    gram_matrix,
    oscillation_profile,
    propagate,
    scaling_study,
    sine_field,
    solve,
    step_element,
    verify_invariance,
)
from deltaphi.inverse import default_probes
from deltaphi.shift import eval_shift

pytestmark = pytest.mark.acceptance

ALPHAS = (0.05, 0.1, 0.3)
TOL = 1e-10
GRID = np.linspace(0.0, math.pi, 1001)

V0 = {
    "cos": np.cos,
    "t^2": lambda t: t ** 2,
    "damped sin3": lambda t: np.sin(3 * t) * t * (math.pi - t) / math.pi ** 2,
    "hat": lambda t: np.maximum(0.0, 1.0 - np.abs(t - math.pi / 2) / (math.pi / 2)),
}


def telescope(v0, alpha):
    return lambda t: v0(t + alpha * np.sin(t)) - v0(t)


@pytest.fixture(scope="module")
def corpus():
    """Round trips for every (v0, alpha): (error mod constant, seconds, lip ratio, K_phi)."""
    out = {}
    for alpha in ALPHAS:
        smap = ShiftMap.build(sine_field(), alpha)
        rep = compute_constants(smap, 0.1)
        for name, v0 in V0.items():
            start = time.perf_counter()
            w = GridFunction.from_callable(telescope(v0, alpha), GRID)
            sol = solve(smap, w, rep, TOL)
            elapsed = time.perf_counter() - start
            diff = sol.v.values - v0(GRID)
            out[(name, alpha)] = (float(diff.max() - diff.min()), elapsed, sol.lip_ratio, rep.K_phi)
    return out


def test_criterion_01_round_trip(corpus, record_property):
    worst = max(v[0] for v in corpus.values())
    slowest = max(v[1] for v in corpus.values())
    record_property("criterion", "1 round-trip inversion")
    record_property("measured", f"max error mod constant {worst:.2e} <= 1e-8, slowest case {slowest:.2f}s <= 5s")
    assert worst <= 1e-8
    assert slowest <= 5.0


def test_criterion_02_telescoping(record_property):
    start = time.perf_counter()
    smap = ShiftMap.build(sine_field(), 0.1)
    rep = compute_constants(smap)
    w = GridFunction.from_callable(lambda t: 0.1 * np.sin(t), GRID)
    verdict = check_solvability(smap, w, default_probes(smap, 32), TOL, rep)
    sol = solve(smap, w, rep, TOL, verdict=verdict)
    elapsed = time.perf_counter() - start
    c_err = float(np.max(np.abs(verdict.bilateral_values - math.pi)))
    v_err = float(np.max(np.abs(sol.v.values - GRID)))
    record_property("criterion", "2 telescoping exactness")
    record_property("measured", f"|C - pi| {c_err:.2e}, |v - t| {v_err:.2e}, {elapsed:.2f}s")
    assert c_err <= 1e-10 and v_err <= 1e-10
    assert elapsed <= 1.0


def test_criterion_03a_sin2t_rejected(record_property):
    smap = ShiftMap.build(sine_field(), 0.1)
    w = GridFunction.from_callable(lambda t: np.sin(2 * t), GRID)
    verdict = check_solvability(smap, w, tol=TOL)
    record_property("criterion", "3a sin(2t) rejected at alpha=0.1, spread >= 1e3*tol")
    record_property("measured", f"spread {verdict.spread:.2e} vs required {1e3 * TOL:.0e}, passed={verdict.passed}")
    assert not verdict.passed
    assert verdict.spread >= 1e3 * TOL


def test_criterion_03b_constant_rejected(record_property):
    smap = ShiftMap.build(sine_field(), 0.1)
    w = GridFunction.from_callable(lambda t: np.ones_like(t), GRID)
    verdict = check_solvability(smap, w, tol=TOL)
    record_property("criterion", "3b w=1 rejected on endpoint decay")
    record_property("measured", f"passed={verdict.passed}, reason={verdict.reason}")
    assert not verdict.passed and verdict.reason == "no endpoint decay"


def test_criterion_04_lipschitz_bound(corpus, record_property):
    ratios = {k: v[2] / v[3] for k, v in corpus.items()}
    worst = max(ratios.values())
    record_property("criterion", "4 lip ratio <= K_phi over the round-trip corpus")
    record_property("measured", f"max lip_ratio/K_phi {worst:.2e} over {len(ratios)} cases")
    assert all(v[2] <= v[3] for v in corpus.values())


def test_criterion_05_geometric_sum(record_property):
    smap = ShiftMap.build(sine_field(), 0.1)
    rep = compute_constants(smap)
    rng = np.random.default_rng(2024)
    q = 1 - smap.alpha * rep.phi_prime_inf * (1 - 2 * rep.delta)
    worst, pairs = 0.0, 0
    while pairs < 100:
        ta, tb = np.sort(rng.uniform(rep.eps_phi, math.pi, 2))
        if tb - ta < 1e-9:
            continue
        a, b, total = np.float64(ta), np.float64(tb), 0.0
        while True:
            d = abs(b - a)
            total += d
            # both points are inside the contraction neighbourhood of t_plus once past it
            if min(a, b) >= math.pi - rep.eps_phi and d * q / (1 - q) < 1e-12:
                break
            a, b = eval_shift(smap, a), eval_shift(smap, b)
        worst = max(worst, total / (tb - ta))
        pairs += 1
    record_property("criterion", "5 geometric-sum constant V_phi")
    record_property("measured", f"max sum ratio {worst:.3f} <= V_phi {rep.V_phi:.3e}")
    assert worst <= rep.V_phi


def test_criterion_06_scaling(record_property):
    rows = scaling_study(sine_field(), 0.1, (0.4, 0.2, 0.1, 0.05, 0.025))
    ak = [r.alpha_K_phi for r in rows]
    jet = [a * cp_bound(ShiftMap.build(sine_field(), a), 1).sum_bound for a in (0.2, 0.1, 0.05)]
    f1, f2 = max(ak) / min(ak), max(jet) / min(jet)
    record_property("criterion", "6 O(1/alpha) scaling")
    record_property("measured", f"alpha*K_phi spread x{f1:.2f}, alpha*jet sum spread x{f2:.2f} (< 10)")
    assert f1 < 10 and f2 < 10


def _mp_fd_jets(t0, alpha, k_max, h=mp.mpf("1e-25")):
    """Central differences of t -> Phi^k t in 100-digit arithmetic, orders 1..3."""
    a = mp.mpf(alpha)

    def orbit(x):
        out = [x]
        for _ in range(k_max):
            x = x + a * mp.sin(x)
            out.append(x)
        return out

    f = [orbit(mp.mpf(t0) + s * h) for s in (-2, -1, 0, 1, 2)]
    return [[float((f[3][k] - f[1][k]) / (2 * h)),
             float((f[3][k] - 2 * f[2][k] + f[1][k]) / h ** 2),
             float((f[4][k] - 2 * f[3][k] + 2 * f[1][k] - f[0][k]) / (2 * h ** 3))]
            for k in range(k_max + 1)]


def test_criterion_07_jets(record_property):
    start = time.perf_counter()
    smap = ShiftMap.build(sine_field(), 0.1)
    worst = 0.0
    with mp.workdps(100):
        for t0 in np.linspace(0.0, math.pi, 11)[1:-1]:
            fd = _mp_fd_jets(float(t0), 0.1, 50)
            for p in (1, 2, 3):
                traj = propagate(smap, float(t0), p, 50)
                for k in range(1, 51):
                    for j in range(p):
                        ref = fd[k][j]
                        worst = max(worst, abs(traj[k].jet[j] - ref) / abs(ref))
    elapsed = time.perf_counter() - start
    record_property("criterion", "7 jet correctness vs central differences")
    record_property("measured", f"max relative error {worst:.2e} <= 1e-5, {elapsed:.2f}s <= 10s")
    assert worst <= 1e-5 and elapsed <= 10.0


def test_criterion_08_contraction(record_property):
    out = []
    for alpha in (0.05, 0.1):
        smap = ShiftMap.build(sine_field(), alpha)
        for p in (1, 3):
            eta = contraction_check(smap, p).eta
            out.append(abs(eta - alpha) / alpha)
    record_property("criterion", "8 contraction eta near alpha at U_plus")
    record_property("measured", f"max |eta - alpha|/alpha {max(out):.3f} <= 0.25")
    assert max(out) <= 0.25


def test_criterion_09_kernel(record_property):
    smap = ShiftMap.build(sine_field(), 0.1)
    rep = compute_constants(smap)
    radii = [0.1, 0.01, 0.001]
    const = constant_element(smap, 1.0, 0.7)
    step = step_element(smap, 1.0)
    const_osc = [o for end in ("minus", "plus") for _, o in oscillation_profile(smap, const, end, radii, report=rep)]
    step_osc = [o for end in ("minus", "plus") for _, o in oscillation_profile(smap, step, end, radii, report=rep)]
    probes = np.random.default_rng(5).uniform(0.01, math.pi - 0.01, 1000)
    defect = max(verify_invariance(smap, e, probes, rep) for e in (const, step))
    record_property("criterion", "9 kernel dichotomy")
    record_property("measured", f"constant osc max {max(const_osc)}, step osc min {min(step_osc)}, invariance defect {defect}")
    assert all(o == 0 for o in const_osc)
    assert all(o >= 0.99 * step.seed_oscillation for o in step_osc)
    assert defect == 0.0


def test_criterion_10_gram(record_property):
    start = time.perf_counter()
    worst = max(gram_matrix(alpha, 16).max_identity_error for alpha in (0.0, 0.1, 0.3))
    elapsed = time.perf_counter() - start
    record_property("criterion", "10 Gram isometry")
    record_property("measured", f"max |G - (pi/2) I| {worst:.2e} <= 1e-8, {elapsed:.2f}s <= 30s")
    assert worst <= 1e-8 and elapsed <= 30.0
