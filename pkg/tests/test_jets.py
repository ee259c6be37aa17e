import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltaphi import GridFunction, JetState, ShiftMap, contraction_check, cp_bound, cp_norm, jet_step, propagate, sine_field
from deltaphi.errors import ContractionNotFound, GridTooCoarse, OrderUnsupported
from deltaphi.jets import jet_step_explicit, propagate_backward, trajectory_csv
from deltaphi.shift import invert_shift, sampled_field


def orbit_map(alpha, k):
    def f(x):
        for _ in range(k):
            x = x + alpha * np.sin(x)
        return x
    return f


def fd_derivs(f, x, h):
    """Central differences for orders 1..3."""
    f2, f1, f0, g1, g2 = (f(x + i * h) for i in (-2, -1, 0, 1, 2))
    return np.array([(g1 - f1) / (2 * h), (g1 - 2 * f0 + f1) / h ** 2, (g2 - 2 * g1 + 2 * f1 - f2) / (2 * h ** 3)])


def test_fixed_point_stationary(smap):
    for end in (0.0, math.pi):
        st_ = JetState(3, end, [0.0, 0.0, 0.0])
        out = jet_step(smap, st_)
        assert out.t == end and np.all(out.jet == 0.0)


def test_one_step_example(smap):
    out = jet_step(smap, JetState.identity(1.0, 3))
    expected = [1 + 0.1 * math.cos(1), -0.1 * math.sin(1), -0.1 * math.cos(1)]
    assert np.allclose(out.jet, expected, rtol=0, atol=1e-15)
    assert out.t == pytest.approx(1 + 0.1 * math.sin(1), abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0.0, math.pi), s=st.floats(-3, 3), r=st.floats(-3, 3), q=st.floats(-3, 3),
       alpha=st.floats(0.01, 0.9))
def test_general_composition_matches_explicit(t, s, r, q, alpha):
    m = ShiftMap.build(sine_field(), alpha)
    st_ = JetState(3, t, [s, r, q])
    a, b = jet_step(m, st_), jet_step_explicit(m, st_)
    assert a.t == b.t
    assert np.allclose(a.jet, b.jet, rtol=1e-13, atol=1e-13)


def test_triangularity(smap):
    base = JetState(4, 1.3, [0.8, -0.4, 0.2, 0.1])
    ref = jet_step(smap, base).jet
    for j in range(4):
        pert = base.jet.copy()
        pert[j] += 0.37
        out = jet_step(smap, JetState(4, base.t, pert)).jet
        assert np.array_equal(out[:j], ref[:j])
        assert out[j] != ref[j]


def test_jets_match_finite_differences(smap):
    traj = propagate(smap, 1.0, 3, 50)
    for k in (1, 10, 25, 50):
        fd = fd_derivs(orbit_map(0.1, k), 1.0, 1e-3)
        assert np.allclose(traj[k].jet, fd, rtol=1e-5, atol=1e-7 * np.abs(fd).max())


def test_higher_order_against_fd(smap):
    # order 4 from the general composition, checked through the order-3 jet of Phi^k'
    traj = propagate(smap, 1.0, 4, 10)
    h = 1e-3
    d1 = lambda x: propagate(smap, x, 1, 10)[-1].jet[0]
    d4 = (d1(1 + 2 * h) - 2 * d1(1 + h) + 2 * d1(1 - h) - d1(1 - 2 * h)) / (2 * h ** 3)
    assert traj[-1].jet[3] == pytest.approx(d4, rel=1e-4)


def test_source_behavior_at_t_minus(smap):
    traj = propagate(smap, 0.0, 3, 20)
    q = 0.0
    for k, st_ in enumerate(traj):
        s = 1.1 ** k
        assert st_.t == 0.0
        assert st_.jet[0] == pytest.approx(s, rel=1e-12)
        # sin''(0) = 0 keeps r at zero while sin'''(0) = -1 feeds q
        assert st_.jet[1] == 0.0
        assert st_.jet[2] == pytest.approx(q, rel=1e-12, abs=1e-15)
        q = 1.1 * q - 0.1 * s ** 3


def test_p1_is_product(smap):
    traj = propagate(smap, 1.0, 1, 40)
    ts = [s.t for s in traj]
    prod = np.cumprod([1.0] + [1 + 0.1 * math.cos(t) for t in ts[:-1]])
    assert np.allclose([s.jet[0] for s in traj], prod, rtol=1e-13)


def test_backward_jets_match_fd(smap):
    traj = propagate_backward(smap, 1.0, 3, 20)

    def back(x):
        for _ in range(20):
            x = invert_shift(smap, x)
        return x
    fd = fd_derivs(back, 1.0, 1e-3)
    assert np.allclose(traj[-1].jet, fd, rtol=1e-5)


def test_order_unsupported():
    t = np.linspace(0, math.pi, 101)
    m = ShiftMap.build(sampled_field(t, np.sin(t)), 0.1)
    propagate(m, 1.0, 2, 3)
    with pytest.raises(OrderUnsupported):
        jet_step(m, JetState.identity(1.0, 3))


def test_trajectory_csv(smap):
    text = trajectory_csv(propagate(smap, 1.0, 3, 5))
    lines = text.splitlines()
    assert lines[0] == "k,t,s,r,q" and lines[1] == "0,1,1,0,0" and len(lines) == 7


@pytest.mark.parametrize("alpha", [0.05, 0.1])
def test_eta_close_to_alpha(alpha):
    m = ShiftMap.build(sine_field(), alpha)
    for p in (1, 3):
        res = contraction_check(m, p)
        assert abs(res.eta - alpha) <= 0.25 * alpha
        assert 0 < res.eta < 1 and res.eta_backward > 0
        assert res.eigenvalue_plus == pytest.approx(1 - alpha)
        assert res.eigenvalue_minus == pytest.approx(1 + alpha)


def test_contraction_not_found_for_large_alpha():
    # eigenvalue 1 - alpha*phi'(t_plus) of a steep field goes negative: no contraction in l1
    m = ShiftMap.build(sine_field(), 0.99)
    try:
        res = contraction_check(m, 3)
    except ContractionNotFound:
        return
    assert res.eta > 0


def test_geometric_decay_beyond_n_k(smap, report):
    con = contraction_check(smap, 3, report=report)
    cp = cp_bound(smap, 3, report, con)
    traj = propagate(smap, 1.0, 3, cp.N_K + 60)
    norms = [s.jet_norm + abs(s.t - math.pi) for s in traj]
    for k in range(cp.N_K, len(norms) - 1):
        assert norms[k + 1] <= (1 - con.eta) * norms[k] * (1 + 1e-9)


def test_cp_bound_dominates_direct_sum(smap, report):
    cp = cp_bound(smap, 1, report)
    assert 0 < cp.eta < 1
    for t0 in np.linspace(report.eps_phi, math.pi - report.eps_phi, 7):
        traj = propagate(smap, t0, 1, 3000)
        total = sum(abs(s.jet[0]) for s in traj)
        assert traj[-1].jet_norm < 1e-12
        assert total <= cp.sum_bound


def test_cp_bound_scaling():
    vals = []
    for a in (0.1, 0.05):
        vals.append(a * cp_bound(ShiftMap.build(sine_field(), a), 1).sum_bound)
    assert max(vals) / min(vals) < 4


def test_cp_bound_on_solution(smap, report):
    from deltaphi.inverse import solve
    grid = np.linspace(0, math.pi, 2001)
    w = GridFunction.from_callable(lambda t: np.cos(t + 0.1 * np.sin(t)) - np.cos(t), grid)
    v = solve(smap, w, report).v
    for p in (1, 2, 3):
        cp = cp_bound(smap, p, report)
        assert cp_norm(v, p) / cp_norm(w, p) <= cp.K_cp / 0.1
        assert cp.sum_bound >= cp.forward_sum_bound


def test_cp_norm_examples():
    g = np.linspace(0, math.pi, 4001)
    assert cp_norm(GridFunction(g, np.full_like(g, -2.5)), 3) == pytest.approx(2.5)
    assert cp_norm(GridFunction.from_callable(lambda t: t, g), 1) == pytest.approx(math.pi + 1)
    # sup of 2 sin t + |cos t| is sqrt(5)
    assert cp_norm(GridFunction.from_callable(np.sin, g), 2) == pytest.approx(math.sqrt(5), abs=1e-5)
    with pytest.raises(GridTooCoarse):
        cp_norm(GridFunction(g[:4], np.sin(g[:4])), 2)
