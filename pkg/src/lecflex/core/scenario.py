"""Scenario documents: YAML loading, validation and canonical serialisation.

A scenario is a YAML mapping with ``schema_version: 1``. Scalars given where a
series is expected are broadcast over the horizon. The optional ``units``
block (``power``: kW | MW, ``price``: SEK/kWh | SEK/MWh, ``impedance``: pu |
ohm) is normalised away: a validated scenario is always canonical, so
validating its serialisation returns an equal scenario.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import MISSING, fields
from pathlib import Path

import yaml

from .device_specs import DEVICE_TYPES
from .errors import (DanglingReferenceError, DisconnectedNetworkError, DuplicatePccError,
                     InvalidValueError, NonPositiveRatingError, ScenarioError, SchemaError,
                     SelfLoopError, SeriesLengthError)
from .types import (CANONICAL_UNITS, Branch, Bus, LECSpec, MarketParams, Network, Scenario,
                    TariffBook)
from .units import POWER_SCALE, PRICE_SCALE, impedance_base

SCHEMA_VERSION = 1

# device fields that carry power or energy (scaled by the power unit) and prices
_DEVICE_POWER = {
    "chp": ("boiler_min", "boiler_max", "ramp", "p_min", "p_max", "initial_boiler_heat"),
    "bes": ("p_ch_max", "p_dis_max", "soc_min", "soc_max", "soc_init", "soc_final_min"),
    "dr": (),
    "tes": ("p_in_max", "h_ch_max", "h_dis_max", "h_idle", "w_min", "w_max", "hr_min", "hr_max"),
    "sb": ("p_max",),
    "hp": ("p_max",),
}
_DEVICE_PRICE = {"chp": ("fuel_cost",), "bes": ("deg_cost",)}
_DEVICE_SERIES = {"sb": ("cold_water_temp",)}


class _Ctx:
    def __init__(self, horizon: int, dt: float, power: float, price: float):
        self.horizon = horizon
        self.dt = dt
        self.power = power
        self.price = price


def _mapping(value, path):
    if not isinstance(value, dict):
        raise SchemaError(f"expected a mapping, got {type(value).__name__}", path)
    return value


def _check_keys(d, allowed, required, path):
    unknown = sorted(set(map(str, d)) - set(allowed))
    if unknown:
        raise SchemaError(f"unknown field(s) {', '.join(unknown)}", path)
    missing = [k for k in required if k not in d]
    if missing:
        raise SchemaError(f"missing required field(s) {', '.join(missing)}", path)


def _number(value, path, allow_inf=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if allow_inf and isinstance(value, str) and value.strip().lower() in ("inf", "+inf", ".inf"):
            return math.inf
        raise SchemaError(f"expected a number, got {value!r}", path)
    v = float(value)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise InvalidValueError(f"non-finite number {value!r}", path)
    return v


def _integer(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise SchemaError(f"expected an integer, got {value!r}", path)
    return int(value)


def _string(value, path) -> str:
    if not isinstance(value, (str, int)) or isinstance(value, bool):
        raise SchemaError(f"expected a string, got {value!r}", path)
    return str(value)


def _series(value, ctx: _Ctx, path, scale=1.0, nonneg=False) -> tuple:
    if isinstance(value, (list, tuple)):
        if len(value) != ctx.horizon:
            raise SeriesLengthError(f"series length {len(value)} != horizon {ctx.horizon}", path)
        out = tuple(_number(v, f"{path}[{i}]") * scale for i, v in enumerate(value))
    else:
        out = (_number(value, path) * scale,) * ctx.horizon
    if nonneg and any(v < 0 for v in out):
        raise InvalidValueError("series must be non-negative", path)
    return out


def _nonneg(value, path, scale=1.0) -> float:
    v = _number(value, path) * scale
    if v < 0:
        raise InvalidValueError(f"{v} must be >= 0", path)
    return v


def _bus(d, ctx, path) -> Bus:
    d = _mapping(d, path)
    keys = ("id", "kind", "voltage_min", "voltage_max", "load_p", "load_q", "pv_p", "dg_p", "dg_q", "pcc_of")
    _check_keys(d, keys, ("id",), path)
    kind = _string(d.get("kind", "load"), f"{path}.kind")
    if kind not in ("slack", "load"):
        raise SchemaError(f"bus kind must be slack or load, got {kind!r}", f"{path}.kind")
    vmin = _number(d.get("voltage_min", 0.9), f"{path}.voltage_min")
    vmax = _number(d.get("voltage_max", 1.1), f"{path}.voltage_max")
    if not 0 < vmin < vmax:
        raise InvalidValueError("voltage bounds must satisfy 0 < min < max", f"{path}.voltage_min")
    pcc = d.get("pcc_of")
    return Bus(
        id=_integer(d["id"], f"{path}.id"), kind=kind, voltage_min=vmin, voltage_max=vmax,
        load_p=_series(d.get("load_p", 0.0), ctx, f"{path}.load_p", ctx.power, nonneg=True),
        load_q=_series(d.get("load_q", 0.0), ctx, f"{path}.load_q", ctx.power, nonneg=True),
        pv_p=_series(d.get("pv_p", 0.0), ctx, f"{path}.pv_p", ctx.power, nonneg=True),
        dg_p=_series(d.get("dg_p", 0.0), ctx, f"{path}.dg_p", ctx.power),
        dg_q=_series(d.get("dg_q", 0.0), ctx, f"{path}.dg_q", ctx.power),
        pcc_of=None if pcc is None else _string(pcc, f"{path}.pcc_of"),
    )


def _branch(d, ctx, zscale, path) -> Branch:
    d = _mapping(d, path)
    keys = ("from_bus", "to_bus", "resistance", "reactance", "charging_susceptance", "rating", "status")
    _check_keys(d, keys, ("from_bus", "to_bus", "resistance", "reactance", "rating"), path)
    status = _string(d.get("status", "closed"), f"{path}.status")
    if status not in ("closed", "open"):
        raise SchemaError(f"branch status must be closed or open, got {status!r}", f"{path}.status")
    r = _number(d["resistance"], f"{path}.resistance") / zscale
    x = _number(d["reactance"], f"{path}.reactance") / zscale
    b = _number(d.get("charging_susceptance", 0.0), f"{path}.charging_susceptance") * zscale
    rating = _number(d["rating"], f"{path}.rating") * ctx.power
    if rating <= 0:
        raise NonPositiveRatingError(f"rating {rating} must be > 0", f"{path}.rating")
    if math.hypot(r, x) <= 0:
        raise InvalidValueError("branch impedance magnitude must be > 0", path)
    if r < 0:
        raise InvalidValueError("branch resistance must be >= 0", f"{path}.resistance")
    br = Branch(_integer(d["from_bus"], f"{path}.from_bus"), _integer(d["to_bus"], f"{path}.to_bus"),
                r, x, rating, b, status)
    if br.from_bus == br.to_bus:
        raise SelfLoopError(f"self-loop branch at bus {br.from_bus}", path)
    return br


def _device(d, ctx, path, index):
    d = _mapping(d, path)
    kind = _string(d.get("type", ""), f"{path}.type")
    if kind not in DEVICE_TYPES:
        raise SchemaError(f"unknown device type {kind!r}", f"{path}.type")
    cls = DEVICE_TYPES[kind]
    names = [f.name for f in fields(cls)]
    required = [f.name for f in fields(cls)
                if f.default is MISSING and f.default_factory is MISSING and f.name != "name"]
    _check_keys(d, ["type"] + names, required, path)
    kwargs = {"name": _string(d.get("name", f"{kind}{index}"), f"{path}.name")}
    for f in fields(cls):
        if f.name == "name" or f.name not in d:
            continue
        value = d[f.name]
        fpath = f"{path}.{f.name}"
        if f.name in _DEVICE_SERIES.get(kind, ()):
            kwargs[f.name] = _series(value, ctx, fpath)
        elif f.name == "energy_neutral":
            if not isinstance(value, bool):
                raise SchemaError("expected a boolean", fpath)
            kwargs[f.name] = value
        elif value is None and f.default is None:
            kwargs[f.name] = None
        else:
            v = _number(value, fpath, allow_inf=True)
            if f.name in _DEVICE_POWER[kind]:
                v *= ctx.power
            elif f.name in _DEVICE_PRICE.get(kind, ()):
                v *= ctx.price
            kwargs[f.name] = v
    try:
        return cls(**kwargs)
    except ScenarioError as exc:
        raise type(exc)(str(exc).split(" (at ")[0], f"{path}.{exc.path}" if exc.path else path) from None


def _lec(d, ctx, path) -> LECSpec:
    d = _mapping(d, path)
    keys = ("id", "pcc_bus", "load_p", "load_q", "heat_load", "hot_water_draw", "ambient_temp",
            "pv_p", "devices", "pcc_rating", "heat_import_max", "heat_export_max")
    _check_keys(d, keys, ("id", "pcc_bus"), path)
    raw_devices = d.get("devices", [])
    if not isinstance(raw_devices, list):
        raise SchemaError("devices must be a list", f"{path}.devices")
    devices = tuple(_device(dev, ctx, f"{path}.devices[{i}]", i) for i, dev in enumerate(raw_devices))
    names = [dev.name for dev in devices]
    if len(set(names)) != len(names):
        raise InvalidValueError("device names must be unique within a LEC", f"{path}.devices")

    def opt(key):
        return None if d.get(key) is None else _nonneg(d[key], f"{path}.{key}", ctx.power)

    spec = LECSpec(
        id=_string(d["id"], f"{path}.id"),
        pcc_bus=_integer(d["pcc_bus"], f"{path}.pcc_bus"),
        load_p=_series(d.get("load_p", 0.0), ctx, f"{path}.load_p", ctx.power, nonneg=True),
        load_q=_series(d.get("load_q", 0.0), ctx, f"{path}.load_q", ctx.power, nonneg=True),
        heat_load=_series(d.get("heat_load", 0.0), ctx, f"{path}.heat_load", ctx.power, nonneg=True),
        hot_water_draw=_series(d.get("hot_water_draw", 0.0), ctx, f"{path}.hot_water_draw", nonneg=True),
        ambient_temp=_series(d.get("ambient_temp", 20.0), ctx, f"{path}.ambient_temp"),
        pv_p=_series(d.get("pv_p", 0.0), ctx, f"{path}.pv_p", ctx.power, nonneg=True),
        devices=devices,
        pcc_rating=_nonneg(d.get("pcc_rating", 0.0), f"{path}.pcc_rating", ctx.power),
        heat_import_max=opt("heat_import_max"),
        heat_export_max=opt("heat_export_max"),
    )
    for dev in devices:
        if dev.kind == "sb":
            if any(v * ctx.dt > dev.volume for v in spec.hot_water_draw):
                raise InvalidValueError("hot-water draw exceeds tank volume in one step",
                                        f"{path}.hot_water_draw")
    return spec


def _tariffs(d, ctx, path) -> TariffBook:
    d = _mapping(d, path)
    keys = ("energy_price", "network_tariff", "heat_price", "heat_variable_charge", "heat_fixed_charge",
            "load_shed_cost")
    _check_keys(d, keys, ("energy_price", "load_shed_cost"), path)
    book = TariffBook(
        energy_price=_series(d["energy_price"], ctx, f"{path}.energy_price", ctx.price, nonneg=True),
        network_tariff=_nonneg(d.get("network_tariff", 0.0), f"{path}.network_tariff", ctx.price),
        heat_price=_series(d.get("heat_price", 0.0), ctx, f"{path}.heat_price", ctx.price, nonneg=True),
        heat_variable_charge=_nonneg(d.get("heat_variable_charge", 0.0), f"{path}.heat_variable_charge",
                                     ctx.price),
        heat_fixed_charge=_nonneg(d.get("heat_fixed_charge", 0.0), f"{path}.heat_fixed_charge"),
        load_shed_cost=_nonneg(d["load_shed_cost"], f"{path}.load_shed_cost", ctx.price),
    )
    if not book.load_shed_cost > 10.0 * max(book.energy_price):
        raise InvalidValueError("load_shed_cost must exceed 10 x max(energy_price)", f"{path}.load_shed_cost")
    return book


def _market(d, path) -> MarketParams:
    d = _mapping(d, path)
    keys = [f.name for f in fields(MarketParams)]
    _check_keys(d, keys, (), path)
    defaults = MarketParams()
    vals = {}
    for k in keys:
        if k in ("max_iterations", "rebound_rounds"):
            vals[k] = _integer(d.get(k, getattr(defaults, k)), f"{path}.{k}")
        else:
            vals[k] = _number(d.get(k, getattr(defaults, k)), f"{path}.{k}")
    m = MarketParams(**vals)
    if not (m.c1 > 0 and m.c3 > 0):
        raise InvalidValueError("c1 and c3 must be > 0", f"{path}.c1")
    if m.c2 < 0 or m.c4 < 0:
        raise InvalidValueError("c2 and c4 must be >= 0", f"{path}.c2")
    if m.max_iterations < 1:
        raise InvalidValueError("max_iterations must be >= 1", f"{path}.max_iterations")
    if m.rebound_rounds < 0:
        raise InvalidValueError("rebound_rounds must be >= 0", f"{path}.rebound_rounds")
    if m.deviation_cap < 0 or m.congestion_tolerance < 0:
        raise InvalidValueError("deviation_cap and congestion_tolerance must be >= 0", path)
    return m


def _check_network(net: Network, path="network"):
    ids = [b.id for b in net.buses]
    if sorted(ids) != list(range(len(ids))):
        raise InvalidValueError("bus ids must be unique and numbered 0..n-1", f"{path}.buses")
    slacks = [b.id for b in net.buses if b.is_slack]
    if len(slacks) != 1 or slacks[0] != 0:
        raise InvalidValueError("exactly one slack bus is required and it must be bus 0", f"{path}.buses")
    n = len(ids)
    for k, br in enumerate(net.branches):
        for end in (br.from_bus, br.to_bus):
            if not 0 <= end < n:
                raise DanglingReferenceError(f"branch references unknown bus {end}", f"{path}.branches[{k}]")
    adj = {i: [] for i in range(n)}
    for br in net.branches:
        if br.closed:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        raise DisconnectedNetworkError(f"buses {missing} are not connected to the slack", f"{path}.branches")


def validate_scenario(raw) -> Scenario:
    """Check every invariant and return the canonical :class:`Scenario`.

    Accepts a parsed document (mapping) or an existing :class:`Scenario`.
    """
    if isinstance(raw, Scenario):
        raw = scenario_to_dict(raw)
    raw = _mapping(raw, "")
    keys = ("schema_version", "name", "horizon", "dt", "units", "network", "tariffs", "market", "lecs")
    _check_keys(raw, keys, ("schema_version", "network", "tariffs", "lecs"), "")
    version = raw["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", "schema_version")
    horizon = _integer(raw.get("horizon", 24), "horizon")
    if horizon < 1:
        raise InvalidValueError("horizon must be >= 1", "horizon")
    dt = _number(raw.get("dt", 1.0), "dt")
    if dt <= 0:
        raise InvalidValueError("dt must be > 0", "dt")
    units = _mapping(raw.get("units", {}) or {}, "units")
    _check_keys(units, ("power", "price", "impedance"), (), "units")
    power_unit = units.get("power", "kW")
    price_unit = units.get("price", "SEK/kWh")
    z_unit = units.get("impedance", "pu")
    if power_unit not in POWER_SCALE:
        raise SchemaError(f"unknown power unit {power_unit!r}", "units.power")
    if price_unit not in PRICE_SCALE:
        raise SchemaError(f"unknown price unit {price_unit!r}", "units.price")
    if z_unit not in ("pu", "ohm"):
        raise SchemaError(f"unknown impedance unit {z_unit!r}", "units.impedance")
    ctx = _Ctx(horizon, dt, POWER_SCALE[power_unit], PRICE_SCALE[price_unit])

    nd = _mapping(raw["network"], "network")
    _check_keys(nd, ("buses", "branches", "base_power", "base_voltage"), ("buses", "branches"), "network")
    base_power = _number(nd.get("base_power", 1000.0), "network.base_power") * ctx.power
    base_voltage = _number(nd.get("base_voltage", 11.0), "network.base_voltage")
    if base_power <= 0 or base_voltage <= 0:
        raise InvalidValueError("network bases must be > 0", "network.base_power")
    zscale = impedance_base(base_power, base_voltage) if z_unit == "ohm" else 1.0
    if not isinstance(nd["buses"], list) or not isinstance(nd["branches"], list):
        raise SchemaError("buses and branches must be lists", "network")
    buses = [_bus(b, ctx, f"network.buses[{i}]") for i, b in enumerate(nd["buses"])]
    branches = tuple(_branch(b, ctx, zscale, f"network.branches[{i}]") for i, b in enumerate(nd["branches"]))
    buses.sort(key=lambda b: b.id)
    network = Network(tuple(buses), branches, base_power, base_voltage)
    _check_network(network)

    tariffs = _tariffs(raw["tariffs"], ctx, "tariffs")
    market = _market(raw.get("market", {}) or {}, "market")
    if not isinstance(raw["lecs"], list):
        raise SchemaError("lecs must be a list", "lecs")
    lecs = tuple(_lec(d, ctx, f"lecs[{i}]") for i, d in enumerate(raw["lecs"]))

    lec_ids = [s.id for s in lecs]
    if len(set(lec_ids)) != len(lec_ids):
        raise InvalidValueError("LEC ids must be unique", "lecs")
    seen_pcc = {}
    for i, spec in enumerate(lecs):
        if not 0 <= spec.pcc_bus < network.num_buses:
            raise DanglingReferenceError(f"LEC {spec.id} references unknown bus {spec.pcc_bus}",
                                         f"lecs[{i}].pcc_bus")
        if spec.pcc_bus in seen_pcc:
            raise DuplicatePccError(f"bus {spec.pcc_bus} is the PCC of both {seen_pcc[spec.pcc_bus]} and {spec.id}",
                                    f"lecs[{i}].pcc_bus")
        if spec.pcc_bus == network.slack:
            raise InvalidValueError("a LEC cannot connect at the slack bus", f"lecs[{i}].pcc_bus")
        seen_pcc[spec.pcc_bus] = spec.id
    # reconcile bus.pcc_of with LEC pcc_bus (missing tags are filled in)
    new_buses = []
    for b in network.buses:
        owner = seen_pcc.get(b.id)
        if b.pcc_of is not None and b.pcc_of not in lec_ids:
            raise DanglingReferenceError(f"bus {b.id} names unknown LEC {b.pcc_of!r}", f"network.buses[{b.id}].pcc_of")
        if b.pcc_of is not None and b.pcc_of != owner:
            raise DanglingReferenceError(f"bus {b.id} is tagged for {b.pcc_of!r} but LEC {b.pcc_of!r} "
                                         f"connects elsewhere", f"network.buses[{b.id}].pcc_of")
        if owner is not None and b.pcc_of is None:
            b = Bus(**{**b.__dict__, "pcc_of": owner})
        new_buses.append(b)
    network = Network(tuple(new_buses), network.branches, network.base_power, network.base_voltage)
    return Scenario(network, tariffs, market, lecs, horizon, dt,
                    _string(raw.get("name", "scenario"), "name"), dict(CANONICAL_UNITS))


def _num_out(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical document (kW, SEK/kWh, per unit) for a validated scenario."""
    def series(t):
        return [float(v) for v in t]

    buses = []
    for b in s.network.buses:
        d = {"id": b.id, "kind": b.kind, "voltage_min": b.voltage_min, "voltage_max": b.voltage_max,
             "load_p": series(b.load_p), "load_q": series(b.load_q), "pv_p": series(b.pv_p),
             "dg_p": series(b.dg_p), "dg_q": series(b.dg_q)}
        if b.pcc_of is not None:
            d["pcc_of"] = b.pcc_of
        buses.append(d)
    branches = [{"from_bus": br.from_bus, "to_bus": br.to_bus, "resistance": br.resistance,
                 "reactance": br.reactance, "charging_susceptance": br.charging_susceptance,
                 "rating": br.rating, "status": br.status} for br in s.network.branches]
    lecs = []
    for spec in s.lecs:
        devs = []
        for dev in spec.devices:
            dd = {"type": dev.kind}
            for f in fields(dev):
                v = getattr(dev, f.name)
                dd[f.name] = series(v) if isinstance(v, tuple) else _num_out(v)
            devs.append(dd)
        d = {"id": spec.id, "pcc_bus": spec.pcc_bus, "load_p": series(spec.load_p),
             "load_q": series(spec.load_q), "heat_load": series(spec.heat_load),
             "hot_water_draw": series(spec.hot_water_draw), "ambient_temp": series(spec.ambient_temp),
             "pv_p": series(spec.pv_p), "devices": devs, "pcc_rating": spec.pcc_rating,
             "heat_import_max": spec.heat_import_max, "heat_export_max": spec.heat_export_max}
        lecs.append(d)
    t = s.tariffs
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "horizon": s.horizon,
        "dt": s.dt,
        "units": dict(CANONICAL_UNITS),
        "network": {"base_power": s.network.base_power, "base_voltage": s.network.base_voltage,
                    "buses": buses, "branches": branches},
        "tariffs": {"energy_price": series(t.energy_price), "network_tariff": t.network_tariff,
                    "heat_price": series(t.heat_price), "heat_variable_charge": t.heat_variable_charge,
                    "heat_fixed_charge": t.heat_fixed_charge, "load_shed_cost": t.load_shed_cost},
        "market": {f.name: getattr(s.market, f.name) for f in fields(MarketParams)},
        "lecs": lecs,
    }


def load_scenario(path) -> Scenario:
    """Read and validate a YAML scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"unparseable scenario file: {exc}", str(path)) from None
    return validate_scenario(raw)


def dump_scenario(s: Scenario, path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(s), sort_keys=False), encoding="utf-8")
