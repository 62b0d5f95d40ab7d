import itertools
import warnings

import numpy as np
import pytest

from lecflex.devices import (BesSpec, ChpSpec, DeviceError, DrSpec, HpSpec, SbSpec, TesSpec, build_bes, build_chp,
                             build_dr, build_hp, build_sb, build_tes, tes_enthalpy, tes_specific_heat)
from lecflex.devices import build as build_mod
from lecflex.milp import Model, SolveOptions, quicksum, solve


def _fix(model, expr_or_var, value):
    model.set_bounds(expr_or_var, value, value)


# CHP

def _chp(**kw):
    base = dict(name="chp", turbine_eff=0.4, boiler_min=0.0, boiler_max=50.0, ramp=100.0, p_min=0.0, p_max=20.0,
                xi_lo=0.0, xi_hi=0.5, fuel_cost=0.1)
    base.update(kw)
    return ChpSpec(**base)


def test_chp_substitution():
    m = Model()
    b = build_chp(m, _chp(), 1)
    _fix(m, b.roles["h_t"][0], 10.0)
    m.set_objective(b.cost)
    ev = b.evaluate(solve(m))
    assert ev["p"][0] == pytest.approx(4.0, abs=1e-9)
    assert ev["h_chp"][0] == pytest.approx(2.4, abs=1e-9)


@pytest.mark.parametrize("sense, expected", [(1.0, 0.0), (-1.0, 2.0)])
def test_chp_reactive_range(sense, expected):
    m = Model()
    b = build_chp(m, _chp(), 1)
    _fix(m, b.roles["h_t"][0], 10.0)
    m.set_objective(sense * b.roles["q"][0])
    assert b.evaluate(solve(m))["q"][0] == pytest.approx(expected, abs=1e-9)


def test_chp_ramp_binds():
    m = Model()
    b = build_chp(m, _chp(ramp=5.0, initial_boiler_heat=0.0), 2)
    m.set_objective(-1.0 * b.roles["h_b"][1])
    ev = b.evaluate(solve(m))
    # single-step oracle: H_1 <= H_0 + 5 <= 0 + 5 + 5
    assert ev["h_b"][0] == pytest.approx(5.0, abs=1e-9)
    assert ev["h_b"][1] == pytest.approx(10.0, abs=1e-9)
    assert np.all(np.abs(np.diff(np.r_[0.0, ev["h_b"]])) <= 5.0 + 1e-9)


def test_zero_horizon_rejected():
    with pytest.raises(DeviceError):
        build_chp(Model(), _chp(), 0)


# BES

def _bes(**kw):
    base = dict(name="bes", eta_ch=1.0, eta_dis=1.0, p_ch_max=1.0, p_dis_max=1.0, soc_min=0.0, soc_max=1.0,
                soc_init=0.0)
    base.update(kw)
    return BesSpec(**base)


def _bes_arbitrage(spec, prices):
    m = Model()
    b = build_bes(m, spec, len(prices))
    m.set_objective(quicksum(-prices[t] * b.electric[t] for t in range(len(prices))) + b.cost)
    return b, solve(m)


def _enumerate_bes(spec, prices):
    best = 0.0
    for pattern in itertools.product((-1, 0, 1), repeat=len(prices)):
        soc, ok, value = spec.soc_init, True, 0.0
        for t, a in enumerate(pattern):
            # a = +1 discharges at full power, -1 charges
            p = a * (spec.p_dis_max if a > 0 else spec.p_ch_max)
            soc += -p * spec.eta_ch if a < 0 else -p / spec.eta_dis
            ok &= spec.soc_min - 1e-12 <= soc <= spec.soc_max + 1e-12
            value += prices[t] * p - spec.deg_cost * abs(p)
        if ok:
            best = max(best, value)
    return best


def test_bes_two_hour_arbitrage():
    b, sol = _bes_arbitrage(_bes(), [0.1, 1.0])
    assert -sol.objective == pytest.approx(_enumerate_bes(_bes(), [0.1, 1.0]), abs=1e-9)
    assert -sol.objective == pytest.approx(0.9, abs=1e-9)
    ev = b.evaluate(sol)
    assert ev["p_ch"][0] == pytest.approx(1.0) and ev["p_dis"][1] == pytest.approx(1.0)


def test_bes_degradation_stops_cycling():
    spec = _bes(deg_cost=10.0)
    b, sol = _bes_arbitrage(spec, [0.1, 1.0])
    assert _enumerate_bes(spec, [0.1, 1.0]) == 0.0
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    ev = b.evaluate(sol)
    assert np.allclose(ev["p_ch"], 0.0, atol=1e-9) and np.allclose(ev["p_dis"], 0.0, atol=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_bes_random_prices_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    prices = list(rng.uniform(0.0, 2.0, 4))
    spec = _bes(eta_ch=0.9, eta_dis=0.9, soc_max=2.0, soc_init=1.0)
    b, sol = _bes_arbitrage(spec, prices)
    ev = b.evaluate(sol)
    assert np.all(ev["u_ch"] + ev["u_dis"] <= 1.0 + 1e-9)
    # at-least-as-good as every full-power pattern
    assert -sol.objective >= _enumerate_bes(spec, prices) - 1e-9


# DR

def test_dr_bounds():
    m = Model()
    b = build_dr(m, DrSpec("dr", xi=0.1, kappa=1.0), np.full(24, 100.0), 24)
    # the terminal energy is pinned to 0 by energy neutrality
    assert m.ub[b.roles["e"][23].index] == 0.0
    for t in range(23):
        assert (m.lb[b.roles["e"][t].index], m.ub[b.roles["e"][t].index]) == (0.0, pytest.approx(10.0))
        assert (m.lb[b.roles["p"][t].index], m.ub[b.roles["p"][t].index]) == (pytest.approx(-10.0),
                                                                             pytest.approx(10.0))


def _dr_day(prices, neutral=True):
    m = Model()
    b = build_dr(m, DrSpec("dr", xi=0.1, kappa=1.0, energy_neutral=neutral), np.full(len(prices), 100.0),
                 len(prices))
    # curtailing P at price c saves c * P
    m.set_objective(quicksum(-prices[t] * b.electric[t] for t in range(len(prices))))
    return b, solve(m)


def test_dr_telescoping():
    rng = np.random.default_rng(3)
    b, sol = _dr_day(list(rng.uniform(0.5, 2.0, 24)))
    ev = b.evaluate(sol)
    assert abs(ev["p"].sum()) <= 1e-9
    assert ev["e"][-1] == pytest.approx(ev["p"].sum(), abs=1e-9)


def test_dr_two_price_day_matches_grid():
    prices = [1.0, 0.2]
    b, sol = _dr_day(prices)
    grid = np.arange(-10.0, 10.5, 0.5)
    best = max(prices[0] * p0 + prices[1] * p1 for p0 in grid for p1 in grid
               if 0.0 <= p0 <= 10.0 and 0.0 <= p0 + p1 <= 10.0 and abs(p0 + p1) <= 1e-12)
    assert -sol.objective == pytest.approx(best, abs=1e-9)
    ev = b.evaluate(sol)
    assert ev["p"][0] > 0 > ev["p"][1]


def test_dr_rejects_negative_load():
    with pytest.raises(DeviceError):
        build_dr(Model(), DrSpec("dr", 0.1, 1.0), [-1.0, 2.0], 2)


# TES

def _tes(**kw):
    base = dict(name="tes", mass=100.0, c_solid=0.0006, c_liquid=0.0008, latent_heat=0.05, t_offset=2.5,
                t_s1=20.0, t_s2=55.0, t_l1=60.0, t_l2=90.0, t_init=20.0, heater_eff=0.9, p_in_max=1.5,
                h_ch_max=1.35, h_dis_max=2.0, stirling_eff=0.3, hx_eff=0.5, mech_eff=0.9, gen_eff=0.95)
    base.update(kw)
    return TesSpec(**base)


def test_specific_heat_regions():
    spec = _tes()
    assert tes_specific_heat(spec, 75.0) == spec.c_liquid
    assert tes_specific_heat(spec, 30.0) == spec.c_solid
    assert tes_specific_heat(spec, spec.t_s2) == spec.c_latent
    assert tes_specific_heat(spec, spec.t_l1) == spec.c_latent
    assert _tes(latent_heat=4.0, t_offset=1.0).c_latent == 2.0
    with pytest.raises(DeviceError):
        tes_specific_heat(spec, 95.0)


def test_enthalpy_piecewise_integral():
    spec = _tes()
    full = spec.mass * (spec.c_solid * 35.0 + spec.c_latent * 5.0 + spec.c_liquid * 30.0)
    assert tes_enthalpy(spec, 20.0, 90.0) == pytest.approx(full, abs=1e-12)
    assert tes_enthalpy(spec, 90.0, 20.0) == pytest.approx(-full, abs=1e-12)
    # trapezoid integration of the specific heat curve
    grid = np.linspace(20.0, 90.0, 70001)
    c = np.array([tes_specific_heat(spec, T) for T in grid])
    assert spec.mass * np.trapezoid(c, grid) == pytest.approx(full, rel=1e-3)


def test_stirling_chain():
    m = Model()
    b = build_tes(m, _tes(mass=10000.0, h_dis_max=10.0, t_init=90.0), 1)
    _fix(m, b.roles["h_dis"][0], 10.0)
    m.set_objective(quicksum(b.roles["p_in"]))
    ev = b.evaluate(solve(m))
    assert ev["p_stir"][0] == pytest.approx(2.565, abs=1e-9)
    assert ev["h_r"][0] == pytest.approx(5.0, abs=1e-9)
    assert ev["electric"][0] == pytest.approx(2.565, abs=1e-9)


def _region(spec, a, b):
    """Regions z1 liquid, z2 latent, z3 solid whose closed band holds both end points."""
    bands = {"z1": (spec.t_l1, spec.t_l2), "z2": (spec.t_s2, spec.t_l1), "z3": (spec.t_s1, spec.t_s2)}
    return [k for k, (lo, hi) in bands.items() if lo - 1e-7 <= a <= hi + 1e-7 and lo - 1e-7 <= b <= hi + 1e-7]


def _classify(spec, ev):
    """Independent post-solve check of region binaries and enthalpy terms."""
    for t in range(len(ev["p_in"])):
        a, b = ev["temp"][t], ev["temp"][t + 1]
        ok = _region(spec, a, b)
        active = [k for k in ("z1", "z2", "z3") if abs(ev[k][t]) > 1e-7]
        assert set(active) <= set(ok), (t, a, b, active)
        c = {"z1": spec.c_liquid, "z2": spec.c_latent, "z3": spec.c_solid}
        assert sum(ev[k][t] for k in active) == pytest.approx(
            sum(spec.mass * c[k] * (b - a) for k in active) if active else 0.0, abs=1e-6)
        # binaries reproduce the position of the starting temperature
        assert ev["u1"][t] + ev["u2"][t] == pytest.approx(1.0)
        assert ev["u3"][t] + ev["u4"][t] == pytest.approx(1.0)
        assert ev["u5"][t] == pytest.approx(ev["u2"][t] * ev["u3"][t])
        assert ev["u_ch"][t] + ev["u_dis"][t] <= 1.0 + 1e-9
        if a < spec.t_s2 - 1e-7:
            assert ev["u1"][t] == pytest.approx(1.0)
        if a > spec.t_l1 + 1e-7:
            assert ev["u4"][t] == pytest.approx(1.0)
        if spec.t_s2 + 1e-7 < a < spec.t_l1 - 1e-7:
            assert ev["u5"][t] == pytest.approx(1.0)


def _z_balance(spec, ev):
    lhs = sum(ev[k].sum() for k in ("z1", "z2", "z3"))
    rhs = (ev["h_ch"] - ev["h_dis"] - spec.h_idle).sum()
    return lhs, rhs


def test_tes_charge_to_full_matches_enthalpy():
    spec = _tes(t_final_min=90.0)
    m = Model()
    b = build_tes(m, spec, 8)
    m.set_objective(quicksum(b.roles["p_in"]))
    sol = solve(m)
    assert sol.is_optimal
    ev = b.evaluate(sol)
    assert ev["temp"][-1] == pytest.approx(90.0, abs=1e-6)
    heat_in = float((spec.heater_eff * ev["p_in"]).sum())
    assert abs(heat_in - tes_enthalpy(spec, 20.0, 90.0)) <= 1e-6
    assert abs(float(ev["p_in"].sum()) - tes_enthalpy(spec, 20.0, 90.0) / spec.heater_eff) <= 1e-6
    # the trajectory crosses all three phases
    active = {k for t in range(8) for k in ("z1", "z2", "z3") if abs(ev[k][t]) > 1e-7}
    assert active == {"z1", "z2", "z3"}
    _classify(spec, ev)
    lhs, rhs = _z_balance(spec, ev)
    assert abs(lhs - rhs) <= 1e-6


def _tes_price_model(spec, prices, heat_value=0.3):
    m = Model()
    b = build_tes(m, spec, len(prices))
    m.set_objective(quicksum(-prices[t] * b.electric[t] - heat_value * b.heat[t] for t in range(len(prices))))
    return m, b


@pytest.mark.parametrize("seed", range(3))
def test_tes_region_logic_and_accounting(seed):
    rng = np.random.default_rng(seed)
    spec = _tes(t_init=float(rng.uniform(40.0, 70.0)), h_idle=0.05)
    m, b = _tes_price_model(spec, list(rng.uniform(0.1, 2.0, 6)))
    sol = solve(m)
    assert sol.is_optimal
    ev = b.evaluate(sol)
    _classify(spec, ev)
    lhs, rhs = _z_balance(spec, ev)
    assert abs(lhs - rhs) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_doubling_big_m_keeps_objective(seed, monkeypatch):
    rng = np.random.default_rng(100 + seed)
    spec = _tes(t_init=float(rng.uniform(30.0, 80.0)))
    prices = list(rng.uniform(0.1, 2.0, 5))
    opts = SolveOptions()
    base = solve(_tes_price_model(spec, prices)[0], opts)
    monkeypatch.setattr(build_mod, "BIG_M_SCALE", 2.0)
    doubled = solve(_tes_price_model(spec, prices)[0], opts)
    assert base.is_optimal and doubled.is_optimal
    tol = opts.gap * max(1.0, abs(base.objective)) + 1e-6
    assert abs(base.objective - doubled.objective) <= tol


# smart boiler

def _sb(horizon, **kw):
    base = dict(name="sb", heater_eff=1.0, volume=1.0, c_water=3600.0, loss_coeff=0.0,
                cold_water_temp=[10.0] * horizon, t_min=0.0, t_max=100.0, p_max=5.0, t_init=50.0)
    base.update(kw)
    return SbSpec(**base)


def _sb_run(spec, horizon, power, draw=None, ambient=None):
    m = Model()
    draw = np.zeros(horizon) if draw is None else draw
    ambient = np.full(horizon, 20.0) if ambient is None else ambient
    b = build_sb(m, spec, draw, ambient, horizon)
    for t in range(horizon):
        _fix(m, b.roles["p"][t], power[t])
    m.set_objective(quicksum(b.roles["p"]))
    return b.evaluate(solve(m))


def test_sb_idle_tank_constant():
    ev = _sb_run(_sb(4), 4, [0.0] * 4)
    assert np.allclose(ev["temp"], 50.0, atol=1e-9)


def test_sb_one_kwh_raises_one_degree():
    spec = _sb(1)
    ev = _sb_run(spec, 1, [1.0])
    # hand evaluation: 1 kWh * 3600 / (V * C) with V * C = 3600
    assert ev["temp"][1] - ev["temp"][0] == pytest.approx(3600.0 * 1.0 / (spec.volume * spec.c_water), abs=1e-9)
    assert ev["temp"][1] - ev["temp"][0] == pytest.approx(1.0, abs=1e-9)


def test_sb_losses_decay_toward_ambient():
    ev = _sb_run(_sb(6, loss_coeff=200.0), 6, [0.0] * 6)
    assert np.all(np.diff(ev["temp"]) < 0)
    assert np.all(ev["temp"] > 20.0)


def test_sb_draw_over_volume_rejected():
    with pytest.raises(DeviceError):
        build_sb(Model(), _sb(1), [2.0], [20.0], 1)


# heat pump

def test_hp_cop():
    m = Model()
    b = build_hp(m, HpSpec("hp", cop=3.0, p_max=2.0), 1)
    m.set_objective(-1.0 * b.heat[0])
    ev = b.evaluate(solve(m))
    assert ev["p"][0] == pytest.approx(2.0) and ev["h"][0] == pytest.approx(6.0)
    assert ev["heat"][0] <= 6.0 + 1e-9


def test_hp_cop_zero_warns():
    with pytest.warns(RuntimeWarning):
        b = build_hp(Model(), HpSpec("hp", cop=0.0, p_max=2.0), 1)
    m = Model()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = build_hp(m, HpSpec("hp", cop=0.0, p_max=2.0), 1)
    _fix(m, b.roles["p"][0], 2.0)
    m.set_objective(quicksum(b.roles["p"]))
    assert b.evaluate(solve(m))["heat"][0] == 0.0


# balance hooks, recomputed outside the solver

def test_balance_hooks_consistent():
    m = Model()
    H = 4
    rng = np.random.default_rng(11)
    chp = build_chp(m, _chp(), H)
    bes = build_bes(m, _bes(soc_max=4.0, soc_init=2.0, deg_cost=0.01), H)
    tes = build_tes(m, _tes(t_init=58.0), H)
    hp = build_hp(m, HpSpec("hp", 3.0, 2.0), H)
    prices = rng.uniform(0.1, 2.0, H)
    devs = (chp, bes, tes, hp)
    m.set_objective(quicksum(-prices[t] * d.electric[t] for d in devs for t in range(H))
                    + quicksum(-0.2 * chp.heat[t] for t in range(H)) + chp.cost + bes.cost)
    sol = solve(m)
    assert sol.is_optimal
    e = {d.name: d.evaluate(sol) for d in devs}
    x = sol.values
    assert np.allclose(e["chp"]["electric"], 0.4 * np.array([x[v.index] for v in chp.roles["h_t"]]), atol=1e-6)
    assert np.allclose(e["chp"]["heat"], e["chp"]["h_chp"] + e["chp"]["h_b2dh"], atol=1e-6)
    assert np.allclose(e["bes"]["electric"], e["bes"]["p_dis"] - e["bes"]["p_ch"], atol=1e-6)
    assert np.all(e["bes"]["u_ch"] + e["bes"]["u_dis"] <= 1.0 + 1e-9)
    assert np.allclose(e["tes"]["electric"], e["tes"]["p_stir"] - e["tes"]["p_in"], atol=1e-6)
    assert np.allclose(e["tes"]["heat"], 0.5 * e["tes"]["h_dis"], atol=1e-6)
    assert np.allclose(e["hp"]["heat"], -3.0 * e["hp"]["electric"], atol=1e-6)
    soc = np.r_[2.0, e["bes"]["soc"]]
    assert np.allclose(np.diff(soc), e["bes"]["p_ch"] - e["bes"]["p_dis"], atol=1e-6)
