"""Built-in scenario generators and the bundled YAML fixtures.

``case1`` congests the head feeder of a 9-bus radial network during the
evening peak; ``case2`` congests an upstream branch with midday PV export;
``uncongested`` never activates the market; ``rebound`` is a network whose
flexibility shifts, if unguarded, overload a neighbouring hour.
``random_scenario`` draws small valid scenarios from a seed.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .core.scenario import SCHEMA_VERSION, load_scenario, validate_scenario

BUNDLED = ("case1", "case2", "uncongested", "rebound")

# per-unit residential shape, peak 1.0 at 18:00
_RES = (0.45, 0.42, 0.40, 0.40, 0.42, 0.50, 0.62, 0.72, 0.70, 0.62, 0.58, 0.58,
        0.60, 0.58, 0.58, 0.62, 0.72, 0.88, 1.00, 0.97, 0.90, 0.78, 0.62, 0.52)
_PRICE = (0.40, 0.38, 0.36, 0.36, 0.38, 0.45, 0.62, 0.80, 0.85, 0.78, 0.70, 0.66,
          0.64, 0.62, 0.64, 0.70, 0.86, 1.05, 1.20, 1.15, 1.00, 0.80, 0.62, 0.50)
_HEAT = (0.85, 0.88, 0.90, 0.92, 0.95, 1.00, 1.00, 0.95, 0.85, 0.75, 0.68, 0.62,
         0.60, 0.60, 0.62, 0.68, 0.75, 0.85, 0.92, 0.95, 0.95, 0.92, 0.90, 0.88)


def _scale(shape, peak, digits=3):
    return [round(peak * s, digits) for s in shape]


def _pv(peak, start=6, end=19):
    out = []
    for t in range(24):
        if start <= t <= end:
            out.append(round(peak * math.sin(math.pi * (t - start + 0.5) / (end - start + 1)) ** 2, 3))
        else:
            out.append(0.0)
    return out


def _bus(i, load=0.0, pf_q=0.2, pv=None, pcc=None, kind="load"):
    d = {"id": i, "kind": kind}
    if load:
        d["load_p"] = _scale(_RES, load)
        d["load_q"] = _scale(_RES, load * pf_q)
    if pv is not None:
        d["pv_p"] = pv
    if pcc is not None:
        d["pcc_of"] = pcc
    return d


def _branch(f, t, r, x, rating):
    return {"from_bus": f, "to_bus": t, "resistance": r, "reactance": x, "rating": rating}


def _tariffs(**kw):
    base = {"energy_price": list(_PRICE), "network_tariff": 0.25, "heat_price": 0.55,
            "heat_variable_charge": 2.0, "heat_fixed_charge": 1.5, "load_shed_cost": 20.0}
    base.update(kw)
    return base


def _bes(name, cap, power, soc_init=None, deg=0.02):
    soc_init = 0.5 * cap if soc_init is None else soc_init
    return {"type": "bes", "name": name, "eta_ch": 0.95, "eta_dis": 0.95, "p_ch_max": power,
            "p_dis_max": power, "soc_min": 0.1 * cap, "soc_max": cap, "soc_init": soc_init,
            "deg_cost": deg, "soc_final_min": soc_init}


def _lec(lid, bus, load, heat, devices, pv=None, rating=300.0, **kw):
    d = {"id": lid, "pcc_bus": bus, "load_p": _scale(_RES, load), "load_q": _scale(_RES, 0.15 * load),
         "heat_load": _scale(_HEAT, heat), "ambient_temp": 5.0, "devices": devices, "pcc_rating": rating}
    if pv is not None:
        d["pv_p"] = pv
    d.update(kw)
    return d


def _nine_bus_branches(head_rating):
    # main feeder 0-1-2-3-4 with laterals 1-5-6 and 2-7-8
    return [
        _branch(0, 1, 0.004, 0.012, head_rating),
        _branch(1, 2, 0.008, 0.016, 900.0),
        _branch(2, 3, 0.010, 0.020, 700.0),
        _branch(3, 4, 0.012, 0.024, 500.0),
        _branch(1, 5, 0.012, 0.024, 600.0),
        _branch(5, 6, 0.014, 0.028, 500.0),
        _branch(2, 7, 0.012, 0.024, 500.0),
        _branch(7, 8, 0.014, 0.028, 400.0),
    ]


def case1() -> dict:
    """Evening-peak load congestion on the head feeder, two LECs at buses 4 and 6."""
    buses = [_bus(0, kind="slack"), _bus(1, 60.0), _bus(2, 110.0), _bus(3, 90.0), _bus(4, pcc="LEC1"),
             _bus(5, 70.0), _bus(6, pcc="LEC2"), _bus(7, 100.0), _bus(8, 80.0)]
    lec1 = _lec("LEC1", 4, 220.0, 160.0, [
        _bes("bes1", 240.0, 70.0),
        {"type": "hp", "name": "hp1", "cop": 3.0, "p_max": 50.0},
        {"type": "dr", "name": "dr1", "xi": 0.1, "kappa": 0.5},
        {"type": "chp", "name": "chp1", "turbine_eff": 0.25, "boiler_min": 0.0, "boiler_max": 120.0,
         "ramp": 60.0, "p_min": 0.0, "p_max": 30.0, "xi_lo": -0.2, "xi_hi": 0.4, "fuel_cost": 0.3},
    ], pv=_pv(60.0))
    lec2 = _lec("LEC2", 6, 180.0, 110.0, [
        _bes("bes2", 180.0, 55.0),
        {"type": "hp", "name": "hp2", "cop": 3.2, "p_max": 35.0},
        {"type": "dr", "name": "dr2", "xi": 0.1, "kappa": 0.5},
        {"type": "sb", "name": "sb2", "heater_eff": 0.95, "volume": 400.0, "c_water": 4.186,
         "loss_coeff": 5.0, "cold_water_temp": 10.0, "t_min": 45.0, "t_max": 80.0, "p_max": 12.0,
         "t_init": 60.0},
    ], pv=_pv(40.0), hot_water_draw=_scale(_RES, 30.0, 1))
    return {
        "schema_version": SCHEMA_VERSION, "name": "case1", "horizon": 24, "dt": 1.0,
        "network": {"base_power": 1000.0, "base_voltage": 11.0, "buses": buses,
                    "branches": _nine_bus_branches(760.0)},
        "tariffs": _tariffs(), "market": {}, "lecs": [lec1, lec2],
    }


def case2() -> dict:
    """Midday reverse flow: LEC2's PV surplus overloads its lateral; LEC1 sits on another lateral."""
    buses = [_bus(0, kind="slack"), _bus(1, 40.0), _bus(2, 60.0), _bus(3, 50.0), _bus(4, pcc="LEC1"),
             _bus(5, 30.0), _bus(6, pcc="LEC2"), _bus(7, 40.0), _bus(8, 30.0)]
    branches = _nine_bus_branches(1200.0)
    branches[5] = _branch(5, 6, 0.014, 0.028, 220.0)
    lec1 = _lec("LEC1", 4, 160.0, 120.0, [
        _bes("bes1", 200.0, 60.0),
        {"type": "hp", "name": "hp1", "cop": 3.0, "p_max": 40.0},
    ], pv=_pv(80.0))
    lec2 = _lec("LEC2", 6, 90.0, 60.0, [
        _bes("bes2", 400.0, 130.0, soc_init=60.0),
        {"type": "hp", "name": "hp2", "cop": 3.0, "p_max": 40.0},
        {"type": "dr", "name": "dr2", "xi": 0.15, "kappa": 0.5},
    ], pv=_pv(420.0), rating=450.0)
    return {
        "schema_version": SCHEMA_VERSION, "name": "case2", "horizon": 24, "dt": 1.0,
        "network": {"base_power": 1000.0, "base_voltage": 11.0, "buses": buses, "branches": branches},
        "tariffs": _tariffs(heat_variable_charge=0.0), "market": {}, "lecs": [lec1, lec2],
    }


def uncongested() -> dict:
    d = case1()
    d["name"] = "uncongested"
    d["network"]["branches"] = _nine_bus_branches(2000.0)
    return d


def rebound() -> dict:
    """Congestion at 18:00 with a head rating that leaves little room at 17:00 and 19:00.

    Storage discharged into 18:00 must be recharged nearby; the deviation guard
    keeps that recharge small, but an unguarded shift overloads the feeder.
    """
    d = case1()
    d["name"] = "rebound"
    d["network"]["branches"][0]["rating"] = 800.0
    return d


GENERATORS = {"case1": case1, "case2": case2, "uncongested": uncongested, "rebound": rebound}


def bundled_path(name: str):
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("lecflex") / "data" / f"{name}.yaml"


def load_bundled(name: str):
    with resources.as_file(bundled_path(name)) as path:
        return load_scenario(path)


def random_scenario(seed: int, num_buses: int | None = None, num_lecs: int | None = None,
                    horizon: int = 6) -> dict:
    """Small random radial scenario with BES / HP / DR LECs and a tight head feeder."""
    rng = np.random.default_rng(seed)
    n = int(num_buses or rng.integers(4, 8))
    k = int(num_lecs or rng.integers(1, min(3, n - 2) + 1))
    parents = [None] + [0] + [int(rng.integers(1, i)) for i in range(2, n)]
    lec_buses = sorted(rng.choice(np.arange(2, n), size=k, replace=False).tolist())
    shape = np.clip(0.6 + 0.4 * np.sin(np.linspace(0, math.pi, horizon)) + rng.normal(0, 0.05, horizon), 0.3, 1.2)
    price = np.round(0.4 + 0.8 * shape / shape.max() + rng.uniform(0, 0.1, horizon), 3)
    buses = [{"id": 0, "kind": "slack"}]
    total = 0.0
    for i in range(1, n):
        b = {"id": i, "kind": "load"}
        if i not in lec_buses:
            peak = float(rng.uniform(20, 80))
            b["load_p"] = [round(peak * s, 3) for s in shape]
            b["load_q"] = [round(0.2 * peak * s, 3) for s in shape]
            total += peak
        buses.append(b)
    lecs = []
    for j, bus in enumerate(lec_buses):
        peak = float(rng.uniform(60, 150))
        total += peak
        cap = float(rng.uniform(60, 200))
        devices = [_bes(f"bes{j}", round(cap, 3), round(cap / 3, 3)),
                   {"type": "hp", "name": f"hp{j}", "cop": 3.0, "p_max": round(0.2 * peak, 3)},
                   {"type": "dr", "name": f"dr{j}", "xi": 0.1, "kappa": 0.5}]
        lecs.append({"id": f"LEC{j + 1}", "pcc_bus": int(bus), "load_p": [round(peak * s, 3) for s in shape],
                     "load_q": [round(0.15 * peak * s, 3) for s in shape],
                     "heat_load": round(0.5 * peak, 3), "devices": devices, "pcc_rating": round(1.5 * peak, 3)})
        buses[bus]["pcc_of"] = f"LEC{j + 1}"
    branches = []
    for i in range(1, n):
        rating = float(rng.uniform(0.85, 0.97) * total * 1.02) if i == 1 else 4.0 * total
        branches.append(_branch(parents[i], i, round(float(rng.uniform(0.002, 0.01)), 5),
                                round(float(rng.uniform(0.006, 0.03)), 5), round(rating, 3)))
    return {
        "schema_version": SCHEMA_VERSION, "name": f"random-{seed}", "horizon": horizon, "dt": 1.0,
        "network": {"base_power": 1000.0, "base_voltage": 11.0, "buses": buses, "branches": branches},
        "tariffs": {"energy_price": price.tolist(), "network_tariff": 0.2, "heat_price": 0.55,
                    "load_shed_cost": 20.0},
        "market": {}, "lecs": lecs,
    }


def generate(name: str):
    """Validated scenario from a named generator."""
    return validate_scenario(GENERATORS[name]())


def write_bundled(directory) -> list:
    """Regenerate the bundled YAML fixtures from the generators above."""
    out = []
    for name in BUNDLED:
        path = Path(directory) / f"{name}.yaml"
        text = yaml.safe_dump(GENERATORS[name](), sort_keys=False, default_flow_style=None, width=110)
        path.write_text(f"# {name}: generated by lecflex.scenarios.write_bundled\n" + text, encoding="utf-8")
        out.append(path)
    return out
