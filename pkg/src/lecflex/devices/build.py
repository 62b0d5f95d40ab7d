"""MILP builders for each device type.

Every builder adds its variables and rows to a caller-owned model and returns
a :class:`DeviceBuild` with per-hour balance hooks:

* ``electric[t]``: kW supplied to the LEC electric bus (negative = consumption)
* ``reactive[t]``: kvar supplied
* ``heat[t]``: kW supplied to the heat balance
* ``cost``: SEK over the horizon

Quantities that are affine in other variables (boiler heat, CHP power,
heater heat, Stirling work) are kept as expressions rather than variables.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..milp import LinExpr, Model, Var, as_expr, quicksum
from .specs import BesSpec, ChpSpec, DrSpec, HpSpec, SbSpec, TesSpec


# multiplies every computed big-M in the TES model; values above 1 only loosen rows
BIG_M_SCALE = 1.0


class DeviceError(ValueError):
    """Device data inconsistent with the requested build."""


@dataclass
class DeviceBuild:
    name: str
    kind: str
    electric: list
    reactive: list
    heat: list
    cost: LinExpr
    roles: dict = field(default_factory=dict)
    binaries: dict = field(default_factory=dict)

    def evaluate(self, values) -> dict:
        """Role name -> per-hour array at a solution value vector."""
        values = getattr(values, "values", values)
        out = {}
        for role, items in {**self.roles, **self.binaries}.items():
            out[role] = np.array([as_expr(v).value(values) for v in items])
        out["electric"] = np.array([as_expr(e).value(values) for e in self.electric])
        out["reactive"] = np.array([as_expr(e).value(values) for e in self.reactive])
        out["heat"] = np.array([as_expr(e).value(values) for e in self.heat])
        return out


def _check_horizon(horizon):
    if int(horizon) != horizon or horizon < 1:
        raise DeviceError(f"horizon must be a positive integer, got {horizon}")


def _zeros(horizon):
    return [LinExpr() for _ in range(horizon)]


def build_chp(model: Model, spec: ChpSpec, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Biomass boiler split between district heat and the turbine."""
    _check_horizon(horizon)
    n = spec.name
    eta = spec.turbine_eff
    b2dh = [model.add_variable(0.0, spec.boiler_max, name=f"{n}.h_b2dh[{t}]") for t in range(horizon)]
    # turbine heat bounds follow from the electric bounds P = eta * H^T
    ht = [model.add_variable(spec.p_min / eta, min(spec.p_max / eta, spec.boiler_max), name=f"{n}.h_t[{t}]")
          for t in range(horizon)]
    q = [model.add_variable(-math.inf, math.inf, name=f"{n}.q[{t}]") for t in range(horizon)]
    hb = [b2dh[t] + ht[t] for t in range(horizon)]
    p = [eta * ht[t] for t in range(horizon)]
    h_chp = [(1.0 - eta) * p[t] for t in range(horizon)]
    for t in range(horizon):
        model.add_range(hb[t], spec.boiler_min, spec.boiler_max, name=f"{n}.boiler_bounds[{t}]")
        step = spec.ramp * dt
        if t > 0:
            model.add_range(hb[t] - hb[t - 1], -step, step, name=f"{n}.ramp[{t}]")
        elif spec.initial_boiler_heat is not None:
            model.add_range(hb[0], spec.initial_boiler_heat - step, spec.initial_boiler_heat + step,
                            name=f"{n}.ramp[0]")
        model.add_constraint(q[t] - spec.xi_lo * p[t], ">=", 0.0, name=f"{n}.q_lo[{t}]")
        model.add_constraint(q[t] - spec.xi_hi * p[t], "<=", 0.0, name=f"{n}.q_hi[{t}]")
    cost = quicksum(spec.fuel_cost * dt * hb[t] for t in range(horizon))
    return DeviceBuild(n, "chp", electric=p, reactive=list(q),
                       heat=[h_chp[t] + b2dh[t] for t in range(horizon)], cost=cost,
                       roles={"h_b2dh": b2dh, "h_t": ht, "h_b": hb, "p": p, "q": q, "h_chp": h_chp})


def build_bes(model: Model, spec: BesSpec, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Battery with binary-gated charge/discharge and an SOC recursion."""
    _check_horizon(horizon)
    n = spec.name
    ch = [model.add_variable(0.0, spec.p_ch_max, name=f"{n}.p_ch[{t}]") for t in range(horizon)]
    dis = [model.add_variable(0.0, spec.p_dis_max, name=f"{n}.p_dis[{t}]") for t in range(horizon)]
    soc = [model.add_variable(spec.soc_min, spec.soc_max, name=f"{n}.soc[{t}]") for t in range(horizon)]
    u_ch = [model.add_binary(name=f"{n}.u_ch[{t}]") for t in range(horizon)]
    u_dis = [model.add_binary(name=f"{n}.u_dis[{t}]") for t in range(horizon)]
    for t in range(horizon):
        prev = soc[t - 1] if t > 0 else spec.soc_init
        model.add_constraint(soc[t] - prev - spec.eta_ch * dt * ch[t] + (dt / spec.eta_dis) * dis[t], "==", 0.0,
                             name=f"{n}.soc_balance[{t}]")
        model.add_constraint(ch[t] - spec.p_ch_max * u_ch[t], "<=", 0.0, name=f"{n}.ch_gate[{t}]")
        model.add_constraint(dis[t] - spec.p_dis_max * u_dis[t], "<=", 0.0, name=f"{n}.dis_gate[{t}]")
        model.add_constraint(u_ch[t] + u_dis[t], "<=", 1.0, name=f"{n}.exclusive[{t}]")
    if spec.soc_final_min is not None:
        model.set_bounds(soc[-1], max(spec.soc_min, spec.soc_final_min), spec.soc_max)
    cost = quicksum(spec.deg_cost * dt * (ch[t] + dis[t]) for t in range(horizon))
    return DeviceBuild(n, "bes", electric=[dis[t] - ch[t] for t in range(horizon)], reactive=_zeros(horizon),
                       heat=_zeros(horizon), cost=cost, roles={"p_ch": ch, "p_dis": dis, "soc": soc},
                       binaries={"u_ch": u_ch, "u_dis": u_dis})


def build_dr(model: Model, spec: DrSpec, load, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Shiftable load as a virtual store: positive power curtails, negative pays back."""
    _check_horizon(horizon)
    load = np.asarray(load, dtype=float)
    if load.shape != (horizon,):
        raise DeviceError(f"DR load series has length {load.size}, expected {horizon}")
    if np.any(load < 0):
        raise DeviceError("DR load series must be non-negative")
    n = spec.name
    cap = spec.xi * load
    p = [model.add_variable(-spec.kappa * cap[t], spec.kappa * cap[t], name=f"{n}.p[{t}]") for t in range(horizon)]
    e = [model.add_variable(0.0, cap[t], name=f"{n}.e[{t}]") for t in range(horizon)]
    for t in range(horizon):
        prev = e[t - 1] if t > 0 else 0.0
        model.add_constraint(e[t] - prev - dt * p[t], "==", 0.0, name=f"{n}.energy[{t}]")
    if spec.energy_neutral:
        model.set_bounds(e[-1], 0.0, 0.0)
    return DeviceBuild(n, "dr", electric=list(p), reactive=_zeros(horizon), heat=_zeros(horizon),
                       cost=LinExpr(), roles={"p": p, "e": e})


def tes_specific_heat(spec: TesSpec, temperature: float) -> float:
    """Piecewise specific heat of the storage medium (kWh/(kg degC)).

    Liquid on ``(L1, L2)``, latent on ``[S2, L1]``, solid on ``(S1, S2)``; the
    outer end points ``S1`` and ``L2`` take their adjacent phase.
    """
    T = float(temperature)
    if not spec.t_s1 <= T <= spec.t_l2 or math.isnan(T):
        raise DeviceError(f"temperature {T} outside [{spec.t_s1}, {spec.t_l2}]")
    if spec.t_s2 <= T <= spec.t_l1:
        return spec.c_latent
    if T > spec.t_l1:
        return spec.c_liquid
    return spec.c_solid


def tes_enthalpy(spec: TesSpec, t_from: float, t_to: float) -> float:
    """Heat (kWh) needed to move the store between two temperatures."""
    sign = 1.0
    lo, hi = float(t_from), float(t_to)
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    total = 0.0
    for a, b, c in ((spec.t_s1, spec.t_s2, spec.c_solid), (spec.t_s2, spec.t_l1, spec.c_latent),
                    (spec.t_l1, spec.t_l2, spec.c_liquid)):
        span = min(hi, b) - max(lo, a)
        if span > 0:
            total += spec.mass * c * span
    return sign * total


def build_tes(model: Model, spec: TesSpec, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Phase-change store with region binaries and big-M enthalpy coupling.

    Step t moves the temperature from ``T[t]`` to ``T[t+1]``. The region of a
    step is selected from ``T[t]`` and both end points are held inside that
    region, so each step's heat uses a single specific heat and the energy
    bookkeeping is exact. Region boundaries are shared by adjacent phases.
    """
    _check_horizon(horizon)
    n = spec.name
    s1, s2, l1, l2 = spec.t_s1, spec.t_s2, spec.t_l1, spec.t_l2
    span = l2 - s1
    m = spec.mass
    eta_h = spec.heater_eff
    p_in_cap = min(spec.p_in_max, spec.h_ch_max / eta_h)
    up_step = eta_h * p_in_cap * dt
    down_step = (spec.h_dis_max + spec.h_idle) * dt
    ms = BIG_M_SCALE
    heat_c = {"z1": spec.c_liquid, "z2": spec.c_latent, "z3": spec.c_solid}

    temp = [model.add_variable(s1, l2, name=f"{n}.temp[{t}]") for t in range(horizon + 1)]
    model.set_bounds(temp[0], spec.t_init, spec.t_init)
    if spec.t_final_min is not None:
        model.set_bounds(temp[-1], spec.t_final_min, l2)
    p_in = [model.add_variable(0.0, p_in_cap, name=f"{n}.p_in[{t}]") for t in range(horizon)]
    h_dis = [model.add_variable(0.0, spec.h_dis_max, name=f"{n}.h_dis[{t}]") for t in range(horizon)]
    u_ch = [model.add_binary(name=f"{n}.u_ch[{t}]") for t in range(horizon)]
    u_dis = [model.add_binary(name=f"{n}.u_dis[{t}]") for t in range(horizon)]
    u = {k: [model.add_binary(name=f"{n}.u{k}[{t}]") for t in range(horizon)] for k in range(1, 6)}
    z = {k: [model.add_variable(-down_step, up_step, name=f"{n}.{k}[{t}]") for t in range(horizon)]
         for k in ("z1", "z2", "z3")}
    gate = {"z1": u[4], "z2": u[5], "z3": u[1]}
    h_ch = [eta_h * p_in[t] for t in range(horizon)]

    for t in range(horizon):
        tag = f"[{t}]"
        T0, T1 = temp[t], temp[t + 1]
        model.add_constraint(z["z1"][t] + z["z2"][t] + z["z3"][t] - dt * h_ch[t] + dt * h_dis[t], "==",
                             -spec.h_idle * dt, name=f"{n}.enthalpy{tag}")
        for k, zk in z.items():
            g = gate[k][t]
            model.add_constraint(zk[t] - up_step * g, "<=", 0.0, name=f"{n}.{k}_gate_hi{tag}")
            model.add_constraint(zk[t] + down_step * g, ">=", 0.0, name=f"{n}.{k}_gate_lo{tag}")
            big = BIG_M_SCALE * m * heat_c[k] * span
            dT = T1 - T0
            model.add_constraint(zk[t] - m * heat_c[k] * dT + big * g, "<=", big, name=f"{n}.{k}_couple_hi{tag}")
            model.add_constraint(zk[t] - m * heat_c[k] * dT - big * g, ">=", -big, name=f"{n}.{k}_couple_lo{tag}")
        for end, T in (("a", T0), ("b", T1)):
            # liquid: T >= L1 ; latent: S2 <= T <= L1 ; solid: T <= S2
            model.add_constraint(T - ms * (l1 - s1) * u[4][t], ">=", l1 - ms * (l1 - s1), name=f"{n}.liquid_{end}{tag}")
            model.add_constraint(T - ms * (s2 - s1) * u[5][t], ">=", s2 - ms * (s2 - s1), name=f"{n}.latent_lo_{end}{tag}")
            model.add_constraint(T + ms * (l2 - l1) * u[5][t], "<=", l1 + ms * (l2 - l1), name=f"{n}.latent_hi_{end}{tag}")
            model.add_constraint(T + ms * (l2 - s2) * u[1][t], "<=", s2 + ms * (l2 - s2), name=f"{n}.solid_{end}{tag}")
        # region selection from the starting temperature
        model.add_constraint(T0 + ms * (s2 - s1) * u[1][t], ">=", s2, name=f"{n}.select1{tag}")
        model.add_constraint(T0 - ms * (l2 - s2) * u[2][t], "<=", s2, name=f"{n}.select2{tag}")
        model.add_constraint(T0 - ms * (l2 - l1) * u[4][t], "<=", l1, name=f"{n}.select4{tag}")
        model.add_constraint(u[1][t] + u[2][t], "==", 1.0, name=f"{n}.u12{tag}")
        model.add_constraint(u[3][t] + u[4][t], "==", 1.0, name=f"{n}.u34{tag}")
        model.add_constraint(u[5][t] - u[3][t], "<=", 0.0, name=f"{n}.u53{tag}")
        model.add_constraint(u[5][t] - u[2][t], "<=", 0.0, name=f"{n}.u52{tag}")
        model.add_constraint(u[2][t] + u[3][t] - u[5][t], "<=", 1.0, name=f"{n}.u523{tag}")
        # heater and discharge gating
        model.add_constraint(p_in[t] - p_in_cap * u_ch[t], "<=", 0.0, name=f"{n}.ch_gate{tag}")
        model.add_constraint(h_dis[t] - spec.h_dis_max * u_dis[t], "<=", 0.0, name=f"{n}.dis_gate{tag}")
        model.add_constraint(u_ch[t] + u_dis[t], "<=", 1.0, name=f"{n}.exclusive{tag}")

    w = [spec.stirling_eff * h_dis[t] for t in range(horizon)]
    h_r = [spec.hx_eff * h_dis[t] for t in range(horizon)]
    w_m = [spec.mech_eff * w[t] for t in range(horizon)]
    p_stir = [spec.gen_eff * w_m[t] for t in range(horizon)]
    for t in range(horizon):
        for label, expr, lo, hi in (("w", w[t], spec.w_min, spec.w_max), ("hr", h_r[t], spec.hr_min, spec.hr_max)):
            if lo > 0:
                model.add_constraint(expr - lo * u_dis[t], ">=", 0.0, name=f"{n}.{label}_min[{t}]")
            if math.isfinite(hi):
                model.add_constraint(expr - hi * u_dis[t], "<=", 0.0, name=f"{n}.{label}_max[{t}]")
    roles = {"temp": temp, "p_in": p_in, "h_ch": h_ch, "h_dis": h_dis, "w": w, "h_r": h_r, "w_m": w_m,
             "p_stir": p_stir, **z}
    binaries = {"u_ch": u_ch, "u_dis": u_dis, **{f"u{k}": u[k] for k in range(1, 6)}}
    return DeviceBuild(n, "tes", electric=[p_stir[t] - p_in[t] for t in range(horizon)],
                       reactive=_zeros(horizon), heat=list(h_r), cost=LinExpr(), roles=roles, binaries=binaries)


def build_sb(model: Model, spec: SbSpec, draw, ambient, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Electric hot-water tank with draw mixing and standing losses."""
    _check_horizon(horizon)
    draw = np.asarray(draw, dtype=float)
    ambient = np.asarray(ambient, dtype=float)
    cold = np.asarray(spec.cold_water_temp, dtype=float)
    for label, arr in (("draw", draw), ("ambient", ambient), ("cold_water_temp", cold)):
        if arr.shape != (horizon,):
            raise DeviceError(f"smart boiler {label} series has length {arr.size}, expected {horizon}")
    if np.any(draw < 0):
        raise DeviceError("hot-water draw must be non-negative")
    if np.any(draw * dt > spec.volume):
        raise DeviceError("hot-water draw exceeds the tank volume in one step")
    n = spec.name
    heat_cap = spec.volume * spec.c_water
    p = [model.add_variable(0.0, spec.p_max, name=f"{n}.p[{t}]") for t in range(horizon)]
    temp = [model.add_variable(spec.t_min, spec.t_max, name=f"{n}.temp[{t}]") for t in range(horizon + 1)]
    model.set_bounds(temp[0], spec.t_init, spec.t_init)
    h = [spec.heater_eff * p[t] for t in range(horizon)]
    for t in range(horizon):
        mix = draw[t] * dt / spec.volume
        loss = spec.loss_coeff * dt / heat_cap
        # T' = T + mix (T_cw - T) + (3600 H dt - kA dt (T - T_a)) / (V C)
        lhs = temp[t + 1] - (1.0 - mix - loss) * temp[t] - (3600.0 * dt / heat_cap) * h[t]
        model.add_constraint(lhs, "==", mix * cold[t] + loss * ambient[t], name=f"{n}.temp_balance[{t}]")
    return DeviceBuild(n, "sb", electric=[-1.0 * p[t] for t in range(horizon)], reactive=_zeros(horizon),
                       heat=[-1.0 * h[t] for t in range(horizon)], cost=LinExpr(),
                       roles={"p": p, "h": h, "temp": temp})


def build_hp(model: Model, spec: HpSpec, horizon: int, dt: float = 1.0) -> DeviceBuild:
    _check_horizon(horizon)
    n = spec.name
    if spec.cop == 0:
        warnings.warn(f"heat pump {n!r} has COP 0 and produces no heat", RuntimeWarning, stacklevel=2)
    p = [model.add_variable(0.0, spec.p_max, name=f"{n}.p[{t}]") for t in range(horizon)]
    h = [spec.cop * p[t] for t in range(horizon)]
    return DeviceBuild(n, "hp", electric=[-1.0 * p[t] for t in range(horizon)], reactive=_zeros(horizon),
                       heat=h, cost=LinExpr(), roles={"p": p, "h": h})


def build_device(model: Model, spec, lec, horizon: int, dt: float = 1.0) -> DeviceBuild:
    """Dispatch on the spec type; ``lec`` supplies load, draw and ambient series."""
    if isinstance(spec, ChpSpec):
        return build_chp(model, spec, horizon, dt)
    if isinstance(spec, BesSpec):
        return build_bes(model, spec, horizon, dt)
    if isinstance(spec, DrSpec):
        return build_dr(model, spec, lec.load_p, horizon, dt)
    if isinstance(spec, TesSpec):
        return build_tes(model, spec, horizon, dt)
    if isinstance(spec, SbSpec):
        return build_sb(model, spec, lec.hot_water_draw, lec.ambient_temp, horizon, dt)
    if isinstance(spec, HpSpec):
        return build_hp(model, spec, horizon, dt)
    raise DeviceError(f"unsupported device spec {type(spec).__name__}")
