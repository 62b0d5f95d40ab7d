import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lecflex.core import Branch, Bus, Network
from lecflex.lec import solve_baseline
from lecflex.powerflow import (POLYGON_SIDES, DivergenceError, MissingExchangeError, PfInjections, PfSolution,
                               assemble_injections, branch_alpha, congestion_report, mismatch, polygon_cuts,
                               powerflow_csv, sensitivities, solve_newton, tangent_cut)
from lecflex.scenarios import BUNDLED, load_bundled
from support import ac_losses, two_bus_voltage


def _two_bus(r=0.01, x=0.1, rating=1000.0, base=1000.0):
    buses = (Bus(0, "slack"), Bus(1, load_p=(500.0,), load_q=(100.0,)))
    return Network(buses, (Branch(0, 1, r, x, rating),), base_power=base)


@pytest.fixture(scope="module")
def baselines():
    out = {}
    for name in BUNDLED:
        s = load_bundled(name)
        out[name] = (s, {l.id: solve_baseline(l, s.tariffs, s.horizon, s.dt) for l in s.lecs})
    return out


def _exchanges(bl):
    return {k: (v.net_p, v.net_q) for k, v in bl.items()}


# injections

def test_single_load_injection():
    net = Network((Bus(0, "slack"), Bus(1, load_p=(10.0,), load_q=(2.0,))), (Branch(0, 1, 0.01, 0.02, 100.0),))
    inj = assemble_injections(net, {}, 0)
    assert inj.p.tolist() == [0.0, -10.0] and inj.q.tolist() == [0.0, -2.0]


def test_pcc_with_flexibility():
    net = Network((Bus(0, "slack"), Bus(1, pcc_of="A")), (Branch(0, 1, 0.01, 0.02, 100.0),))
    ex = {"A": (np.array([5.0]), np.array([1.0]))}
    assert assemble_injections(net, ex, 0, {"A": 2.0}, {"A": 1}).p[1] == -3.0
    assert assemble_injections(net, ex, 0, {"A": 2.0}, {"A": -1}).p[1] == -7.0
    # reactive power never carries flexibility
    assert assemble_injections(net, ex, 0, {"A": 2.0}).q[1] == -1.0


def test_all_zero_injections():
    net = Network((Bus(0, "slack"), Bus(1), Bus(2)), (Branch(0, 1, 0.01, 0.02, 1.0), Branch(1, 2, 0.01, 0.02, 1.0)))
    inj = assemble_injections(net, {}, 0)
    assert not inj.p.any() and not inj.q.any()


def test_missing_exchange():
    net = Network((Bus(0, "slack"), Bus(1, pcc_of="A")), (Branch(0, 1, 0.01, 0.02, 100.0),))
    with pytest.raises(MissingExchangeError):
        assemble_injections(net, {}, 0)


# Newton solve

def test_flat_start_exact():
    net = _two_bus()
    sol = solve_newton(net, PfInjections(np.zeros(2), np.zeros(2)))
    assert sol.iterations == 0
    assert np.array_equal(sol.v, np.ones(2)) and np.array_equal(sol.theta, np.zeros(2))
    assert not sol.p_from.any() and not sol.q_from.any()


def test_two_bus_closed_form():
    net = _two_bus()
    sol = solve_newton(net, assemble_injections(net, {}, 0))
    v, ang = two_bus_voltage(0.5, 0.1, 0.01, 0.1)
    assert abs(sol.v[1] - v) <= 1e-8
    assert abs(sol.theta[1] - ang) <= 1e-8
    # receiving-end power equals the load
    assert sol.p_to[0] == pytest.approx(-500.0, abs=1e-5)
    assert sol.q_to[0] == pytest.approx(-100.0, abs=1e-5)


def test_divergence_named():
    net = _two_bus()
    heavy = PfInjections(np.array([0.0, -20000.0]), np.array([0.0, -5000.0]))
    with pytest.raises(DivergenceError) as info:
        solve_newton(net, heavy)
    assert info.value.mismatch > 0


@pytest.mark.parametrize("hour", [3, 12, 18])
@pytest.mark.parametrize("name", BUNDLED)
def test_residuals_and_loss_identity(baselines, name, hour):
    s, bl = baselines[name]
    net = s.network
    inj = assemble_injections(net, _exchanges(bl), hour)
    sol = solve_newton(net, inj)
    assert mismatch(net, inj, sol) <= 1e-8
    losses = ac_losses(net, sol)
    assert losses >= 0.0
    assert sol.losses == pytest.approx(losses, abs=1e-6)
    load = -sum(inj.p[b.id] for b in net.buses if not b.is_slack)
    assert abs(sol.p_slack - (load + losses)) <= 1e-6
    assert np.allclose(sol.s_from, np.hypot(sol.p_from, sol.q_from), atol=1e-9)


def test_solution_deterministic(baselines):
    s, bl = baselines["case1"]
    inj = assemble_injections(s.network, _exchanges(bl), 18)
    a, b = solve_newton(s.network, inj), solve_newton(s.network, inj)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.theta, b.theta)


# congestion margins

def _fake_solution(flow):
    z = np.zeros(1)
    return PfSolution(np.ones(2), np.zeros(2), np.array([flow]), z, np.array([-flow]), z, flow, 0.0, 0, 0.0)


def test_alpha_overload_flagged():
    net = _two_bus(rating=100.0)
    rep = congestion_report(net, [_fake_solution(110.0)], tolerance=0.1)
    assert rep.alpha[0, 0] == pytest.approx(-10.0)
    assert rep.congested == [(0, 0)]


def test_alpha_zero_flow_clean():
    net = _two_bus(rating=100.0)
    rep = congestion_report(net, [_fake_solution(0.0)])
    assert rep.alpha[0, 0] == 100.0 and not rep.is_congested()


def test_case1_head_feeder_congested(baselines):
    s, bl = baselines["case1"]
    sols = [solve_newton(s.network, assemble_injections(s.network, _exchanges(bl), t)) for t in range(s.horizon)]
    rep = congestion_report(s.network, sols, s.market.congestion_tolerance)
    assert {l for l, _ in rep.congested} == {0}
    assert set(rep.hours) >= {17, 18, 19}
    assert np.allclose(rep.alpha[:, 18], branch_alpha(s.network, sols[18]))
    # alpha uses the larger end flow
    assert np.all(sols[18].s_max >= sols[18].s_from)


def test_powerflow_csv_shape(baselines):
    s, bl = baselines["case1"]
    sol = solve_newton(s.network, assemble_injections(s.network, _exchanges(bl), 5))
    lines = powerflow_csv(s.network, [sol]).splitlines()
    assert lines[0] == "hour,element,id,v_pu,angle_rad,p_kw,q_kvar,s_kva,alpha_kva"
    assert len(lines) == 1 + s.network.num_buses + len(s.network.branches)


# linearisation

def _perturb(net, inj, bus, eps=1.0):
    p = inj.p.copy()
    p[bus] += eps
    return solve_newton(net, PfInjections(p, inj.q, inj.hour))


def test_sensitivity_downstream_and_parallel(baselines):
    s, bl = baselines["case1"]
    net = s.network
    inj = assemble_injections(net, _exchanges(bl), 18)
    sol = solve_newton(net, inj)
    lin = sensitivities(net, sol, branches=[3, 5], buses=[4, 6])
    # LEC1 at bus 4 sits directly below branch 3-4; branch 5-6 is on another lateral
    assert abs(abs(lin.ds[0, 0]) - 1.0) <= 0.05
    assert abs(lin.ds[1, 0]) <= 1e-3
    fd = _perturb(net, inj, 4)
    assert abs(abs(fd.s_max[3] - sol.s_max[3]) - 1.0) <= 0.05
    assert abs(fd.s_max[5] - sol.s_max[5]) <= 1e-3


@pytest.mark.parametrize("name", BUNDLED)
def test_sensitivity_fidelity(baselines, name):
    s, bl = baselines[name]
    net = s.network
    pcc = sorted(net.pcc_buses().values())
    for hour in (12, 18):
        inj = assemble_injections(net, _exchanges(bl), hour)
        sol = solve_newton(net, inj)
        lin = sensitivities(net, sol, buses=pcc)
        for j, bus in enumerate(pcc):
            fd = _perturb(net, inj, bus)
            p, q = lin.predict(np.eye(len(pcc))[j])
            predicted = np.maximum(np.hypot(p[0], q[0]), np.hypot(p[1], q[1]))
            actual = fd.s_max - sol.s_max
            assert np.all(np.abs((predicted - sol.s_max) - actual) <= 0.02 * np.abs(actual) + 0.01)


def test_polygon_outer_geometry():
    cuts = polygon_cuts(100.0)
    assert len(cuts) == POLYGON_SIDES == 12
    rng = np.random.default_rng(0)
    r_in = 100.0 * math.cos(math.pi / 12)
    for _ in range(2000):
        ang = rng.uniform(0, 2 * math.pi)
        rad = rng.uniform(0, 130.0)
        p, q = rad * math.cos(ang), rad * math.sin(ang)
        ok = all(a * p + b * q <= c + 1e-9 for a, b, c in cuts)
        if rad <= r_in:
            assert ok
        if not ok:
            assert rad > 100.0 * (1 - 1e-9)


def test_polygon_contains_origin_and_is_convex():
    cuts = polygon_cuts(50.0)
    assert all(c > 0 for _, _, c in cuts)
    # unit normals at evenly spaced angles
    angles = sorted(math.atan2(b, a) % (2 * math.pi) for a, b, _ in cuts)
    assert np.allclose(np.diff(angles), 2 * math.pi / 12)


def test_tangent_cut():
    a, b, c = tangent_cut(10.0, 3.0, 4.0)
    assert (a, b, c) == (pytest.approx(0.6), pytest.approx(0.8), 10.0)
    assert tangent_cut(10.0, 0.0, 0.0) is None


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 400.0), st.floats(-100.0, 100.0))
def test_two_bus_property(p, q):
    net = Network((Bus(0, "slack"), Bus(1, load_p=(p,), load_q=(q,))), (Branch(0, 1, 0.01, 0.1, 1000.0),))
    sol = solve_newton(net, assemble_injections(net, {}, 0))
    v, ang = two_bus_voltage(p / 1000.0, q / 1000.0, 0.01, 0.1)
    assert abs(sol.v[1] - v) <= 1e-8 and abs(sol.theta[1] - ang) <= 1e-8
