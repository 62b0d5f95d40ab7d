"""LEC scheduling: baseline, flexibility bid and post-allocation commitment.

All three stages share one model: device constraints plus active, reactive
and heat balances at the connection point. The bid stage adds a revenue term
for flexibility delivered in congestion hours; the commitment stage pins that
flexibility to the accepted amounts.

Sign conventions: exchange quantities are non-negative, ``net = import -
export`` (positive = the LEC draws from the grid). Flexibility in an hour is
``direction * (baseline_net - net)`` with direction +1 for "reduce net import"
and -1 for "increase net import".
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core.types import LECSpec, TariffBook
from ..devices import build_device
from ..milp import Model, SolveOptions, quicksum, solve

REDUCE_IMPORT = 1
INCREASE_IMPORT = -1
# relative tolerance on delivering an accepted amount
ACCEPT_BAND = 1e-8
ACCEPT_PENALTY = 1e4


class LECError(RuntimeError):
    """A LEC scheduling problem could not be solved."""

    def __init__(self, message: str, status=None, stage: str = ""):
        self.status = status
        self.stage = stage
        super().__init__(message)


class LECInfeasibleError(LECError):
    pass


class CommitmentError(LECError):
    """Accepted flexibility cannot be delivered."""


@dataclass(frozen=True)
class FlexSignal:
    """DSO request to one LEC.

    ``hours``, ``prices`` and ``directions`` are aligned.
    """

    lec_id: str
    hours: tuple
    prices: tuple
    directions: tuple
    deviation_cap: float

    def __post_init__(self):
        n = len(self.hours)
        if not (len(self.prices) == len(self.directions) == n):
            raise ValueError("flex signal fields must have equal lengths")
        if any(p < 0 for p in self.prices):
            raise ValueError("flexibility prices must be non-negative")
        if any(d not in (REDUCE_IMPORT, INCREASE_IMPORT) for d in self.directions):
            raise ValueError("directions must be +1 (reduce import) or -1 (increase import)")
        if len(set(self.hours)) != n:
            raise ValueError("duplicate congestion hour in flex signal")
        if self.deviation_cap < 0:
            raise ValueError("deviation_cap must be >= 0")


@dataclass(frozen=True)
class FlexBid:
    lec_id: str
    hours: tuple
    flex_max: tuple
    objective: float
    operating_cost: float


@dataclass
class Schedule:
    """Day-ahead dispatch of one LEC (exchanges in kW / kvar, costs in SEK)."""

    lec_id: str
    stage: str
    p_import: np.ndarray
    p_export: np.ndarray
    q_import: np.ndarray
    q_export: np.ndarray
    h_import: np.ndarray
    h_export: np.ndarray
    objective: float
    operating_cost: float
    costs: dict
    devices: dict = field(default_factory=dict)
    flexibility: np.ndarray | None = None
    revenue: float = 0.0

    @property
    def net_p(self) -> np.ndarray:
        return self.p_import - self.p_export

    @property
    def net_q(self) -> np.ndarray:
        return self.q_import - self.q_export

    @property
    def net_h(self) -> np.ndarray:
        return self.h_import - self.h_export

    @property
    def horizon(self) -> int:
        return self.p_import.size


class BaselineSchedule(Schedule):
    pass


class CommittedSchedule(Schedule):
    pass


def net_exchange(schedule: Schedule) -> tuple[np.ndarray, np.ndarray]:
    """Per-hour (P, Q) drawn at the PCC; positive = the LEC imports."""
    return schedule.net_p, schedule.net_q


def _split(net: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(net, 0.0), np.maximum(-net, 0.0)


@dataclass
class _Built:
    model: Model
    p_im: list
    p_ex: list
    q_im: list
    q_ex: list
    h_im: list
    h_ex: list
    peak: object
    devices: list
    base_cost: object


def _build(spec: LECSpec, tariffs: TariffBook, horizon: int, dt: float) -> _Built:
    model = Model(f"lec-{spec.id}")
    inf = float("inf")
    him_max = inf if spec.heat_import_max is None else spec.heat_import_max
    hex_max = inf if spec.heat_export_max is None else spec.heat_export_max
    p_im = [model.add_variable(0.0, inf, name=f"p_im[{t}]") for t in range(horizon)]
    p_ex = [model.add_variable(0.0, inf, name=f"p_ex[{t}]") for t in range(horizon)]
    q_im = [model.add_variable(0.0, inf, name=f"q_im[{t}]") for t in range(horizon)]
    q_ex = [model.add_variable(0.0, inf, name=f"q_ex[{t}]") for t in range(horizon)]
    h_im = [model.add_variable(0.0, him_max, name=f"h_im[{t}]") for t in range(horizon)]
    h_ex = [model.add_variable(0.0, hex_max, name=f"h_ex[{t}]") for t in range(horizon)]
    builds = [build_device(model, dev, spec, horizon, dt) for dev in spec.devices]
    pv = np.asarray(spec.pv_p, dtype=float)
    load_p = np.asarray(spec.load_p, dtype=float)
    load_q = np.asarray(spec.load_q, dtype=float)
    heat_load = np.asarray(spec.heat_load, dtype=float)
    for t in range(horizon):
        elec = quicksum(b.electric[t] for b in builds)
        model.add_constraint(p_ex[t] - p_im[t] - elec, "==", pv[t] - load_p[t], name=f"balance_p[{t}]")
        reac = quicksum(b.reactive[t] for b in builds)
        model.add_constraint(q_ex[t] - q_im[t] - reac, "==", -load_q[t], name=f"balance_q[{t}]")
        heat = quicksum(b.heat[t] for b in builds)
        model.add_constraint(h_ex[t] - h_im[t] - heat, "==", -heat_load[t], name=f"balance_h[{t}]")
    lam_e = tariffs.energy()
    lam_h = tariffs.heat()
    peak = None
    if tariffs.heat_variable_charge > 0:
        peak = model.add_variable(0.0, him_max, name="h_peak")
        for t in range(horizon):
            model.add_constraint(peak - h_im[t], ">=", 0.0, name=f"peak[{t}]")
    cost = quicksum((lam_e[t] + tariffs.network_tariff) * dt * p_im[t] - lam_e[t] * dt * p_ex[t]
                    + lam_h[t] * dt * (h_im[t] - h_ex[t]) for t in range(horizon))
    if peak is not None:
        cost += tariffs.heat_variable_charge * peak
    cost += tariffs.heat_fixed_charge * dt * horizon
    cost += quicksum(b.cost for b in builds)
    return _Built(model, p_im, p_ex, q_im, q_ex, h_im, h_ex, peak, builds, cost)


def cost_breakdown(p_import, p_export, h_import, h_export, device_costs: dict, tariffs: TariffBook,
                   dt: float) -> dict:
    """Operating-cost terms recomputed from exchange series."""
    lam_e = tariffs.energy()
    lam_h = tariffs.heat()
    horizon = len(p_import)
    out = {
        "energy": float(np.sum(lam_e * (p_import - p_export)) * dt),
        "network_tariff": float(tariffs.network_tariff * np.sum(p_import) * dt),
        "heat": float(np.sum(lam_h * (h_import - h_export)) * dt),
        "heat_peak": float(tariffs.heat_variable_charge * (np.max(h_import) if horizon else 0.0)),
        "heat_fixed": float(tariffs.heat_fixed_charge * dt * horizon),
        "fuel": float(device_costs.get("chp", 0.0)),
        "degradation": float(device_costs.get("bes", 0.0)),
    }
    return out


def _extract(built: _Built, sol, spec: LECSpec, tariffs: TariffBook, dt: float, stage: str, cls=Schedule,
             flex=None, revenue=0.0) -> Schedule:
    x = sol.values

    def arr(vs):
        return np.array([x[v.index] for v in vs])

    p_im, p_ex = _split(arr(built.p_im) - arr(built.p_ex))
    q_im, q_ex = _split(arr(built.q_im) - arr(built.q_ex))
    h_im, h_ex = _split(arr(built.h_im) - arr(built.h_ex))
    dev_costs: dict = {}
    devices = {}
    for b in built.devices:
        dev_costs[b.kind] = dev_costs.get(b.kind, 0.0) + b.cost.value(x)
        devices[b.name] = b.evaluate(x)
    costs = cost_breakdown(p_im, p_ex, h_im, h_ex, dev_costs, tariffs, dt)
    opcost = float(sum(costs.values()))
    return cls(spec.id, stage, p_im, p_ex, q_im, q_ex, h_im, h_ex, opcost - revenue, opcost, costs, devices,
               flex, revenue)


def _solve(model: Model, options, stage, spec):
    sol = solve(model, options or SolveOptions())
    if not sol.is_optimal:
        cls = CommitmentError if stage == "commitment" else LECInfeasibleError
        raise cls(f"LEC {spec.id}: {stage} problem ended with status {sol.status.value}", sol.status, stage)
    return sol


def solve_baseline(spec: LECSpec, tariffs: TariffBook, horizon: int, dt: float = 1.0,
                   options: SolveOptions | None = None) -> BaselineSchedule:
    """Cost-minimal day-ahead dispatch without any flexibility request."""
    built = _build(spec, tariffs, horizon, dt)
    built.model.set_objective(built.base_cost)
    sol = _solve(built.model, options, "baseline", spec)
    return _extract(built, sol, spec, tariffs, dt, "baseline", BaselineSchedule,
                    flex=np.zeros(horizon))


def _add_flex(built: _Built, spec: LECSpec, baseline: Schedule, signal: FlexSignal, horizon: int):
    """Flexibility expressions for congestion hours and the deviation guard elsewhere."""
    if signal.lec_id != spec.id:
        raise ValueError(f"signal for {signal.lec_id} sent to LEC {spec.id}")
    base = baseline.net_p
    net = [built.p_im[t] - built.p_ex[t] for t in range(horizon)]
    flex = {}
    for h, d in zip(signal.hours, signal.directions):
        if not 0 <= h < horizon:
            raise ValueError(f"congestion hour {h} outside horizon")
        flex[h] = d * (base[h] - net[h])
        built.model.add_constraint(flex[h], ">=", 0.0, name=f"flex[{h}]")
    for t in range(horizon):
        if t in flex:
            continue
        cap = signal.deviation_cap * max(abs(base[t]), spec.pcc_rating)
        built.model.add_range(net[t], base[t] - cap, base[t] + cap, name=f"guard[{t}]")
    return flex


def solve_flex_bid(spec: LECSpec, tariffs: TariffBook, baseline: Schedule, signal: FlexSignal,
                   horizon: int, dt: float = 1.0, options: SolveOptions | None = None) -> tuple[FlexBid, Schedule]:
    """Re-schedule against flexibility prices and report the offered amounts."""
    built = _build(spec, tariffs, horizon, dt)
    flex = _add_flex(built, spec, baseline, signal, horizon)
    price = dict(zip(signal.hours, signal.prices))
    revenue = quicksum(price[h] * dt * flex[h] for h in signal.hours)
    built.model.set_objective(built.base_cost - revenue)
    sol = _solve(built.model, options, "bid", spec)
    offered = np.zeros(horizon)
    for h in signal.hours:
        offered[h] = max(flex[h].value(sol.values), 0.0)
    rev = float(sum(price[h] * dt * offered[h] for h in signal.hours))
    sched = _extract(built, sol, spec, tariffs, dt, "bid", Schedule, flex=offered, revenue=rev)
    bid = FlexBid(spec.id, tuple(signal.hours), tuple(float(offered[h]) for h in signal.hours),
                  sched.objective, sched.operating_cost)
    return bid, sched


def solve_commitment(spec: LECSpec, tariffs: TariffBook, baseline: Schedule, signal: FlexSignal,
                     accepted: Sequence[float], horizon: int, dt: float = 1.0,
                     options: SolveOptions | None = None) -> CommittedSchedule:
    """Dispatch that delivers exactly the accepted flexibility (aligned with ``signal.hours``)."""
    accepted = [float(a) for a in accepted]
    if len(accepted) != len(signal.hours):
        raise ValueError("accepted amounts must align with the signal hours")
    if any(a < -1e-9 for a in accepted):
        raise ValueError("accepted flexibility must be non-negative")
    built = _build(spec, tariffs, horizon, dt)
    flex = _add_flex(built, spec, baseline, signal, horizon)
    m = built.model
    slack = []
    for h, a in zip(signal.hours, accepted):
        # penalised slack absorbs wire rounding when the dispatch has no freedom left
        a = max(a, 0.0)
        band = ACCEPT_BAND * max(1.0, a)
        lo, hi = m.add_variable(0.0, band, name=f"acc_lo[{h}]"), m.add_variable(0.0, band, name=f"acc_hi[{h}]")
        m.add_constraint(flex[h] + lo - hi, "==", a, name=f"accepted[{h}]")
        slack += [lo, hi]
    m.set_objective(built.base_cost + ACCEPT_PENALTY * quicksum(slack))
    sol = _solve(built.model, options, "commitment", spec)
    delivered = np.zeros(horizon)
    for h, a in zip(signal.hours, accepted):
        delivered[h] = max(a, 0.0)
    price = dict(zip(signal.hours, signal.prices))
    rev = float(sum(price[h] * dt * delivered[h] for h in signal.hours))
    return _extract(built, sol, spec, tariffs, dt, "commitment", CommittedSchedule, flex=delivered, revenue=rev)


def schedule_to_csv(schedule: Schedule, path=None) -> str:
    """Long-format CSV (hour, variable, value); returns the text and optionally writes it."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hour", "variable", "value"])
    series = {"p_import": schedule.p_import, "p_export": schedule.p_export, "q_import": schedule.q_import,
              "q_export": schedule.q_export, "h_import": schedule.h_import, "h_export": schedule.h_export}
    if schedule.flexibility is not None:
        series["flexibility"] = schedule.flexibility
    for dev, roles in sorted(schedule.devices.items()):
        for role, arr in sorted(roles.items()):
            if np.ndim(arr) == 1 and len(arr) == schedule.horizon:
                series[f"{dev}.{role}"] = arr
    for name, arr in series.items():
        for t, v in enumerate(arr):
            w.writerow([t, name, f"{float(v):.9g}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
