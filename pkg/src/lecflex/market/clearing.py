"""DSO optimisation problems: flexibility requirement and final allocation.

Both are per-hour LPs over a first-order flow model: end flows of every
closed branch move with the PCC flexibility and bus load shedding through the
Jacobian sensitivities, and must stay inside a 12-sided polygon around the
rating circle plus the tangent cut in the direction of the current flow.
Every allocation is re-checked with the full AC power flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.types import Network, TariffBook
from ..milp import Model, SolveOptions, quicksum, solve_lp
from ..powerflow import (Linearization, PfInjections, assemble_injections, branch_alpha, polygon_cuts,
                         sensitivities, solve_newton, tangent_cut)
from .prices import MarketError, PriceState

SENSITIVITY_THRESHOLD = 0.05
VIOLATION_WEIGHT = 1e3
SUCCESSIVE_ROUNDS = 6
CORRECTIVE_SCALE = 0.95


class AllocationError(MarketError):
    """No allocation passed AC verification."""


@dataclass(frozen=True)
class Attribution:
    """Which branches each PCC can move (``|dS/dP| >= threshold``) and its direction at one hour."""

    hour: int
    influence: dict
    direction: dict
    sensitivity: dict
    congested: tuple = ()

    def attributed(self, lec: str) -> bool:
        """True when ``lec`` influences at least one congested branch."""
        return any(l in self.congested for l in self.influence.get(lec, ()))


@dataclass
class Requirement:
    hour: int
    flexibility: dict
    directions: dict
    shedding: dict
    cost: float
    unresolved: float

    @property
    def total(self) -> float:
        return float(sum(self.flexibility.values()))


@dataclass
class Allocation:
    """Cleared flexibility and shedding keyed by ``(hour, lec)`` / ``(hour, bus)``."""

    hours: tuple
    cleared: dict
    offered: dict
    prices: dict
    directions: dict
    shedding: dict
    requirement: dict
    dso_cost: float
    verified: bool
    corrective: tuple = ()
    min_alpha: dict = field(default_factory=dict)

    @property
    def total_shedding(self) -> float:
        return float(sum(self.shedding.values()))


def attribute(network: Network, lin: Linearization, alpha: np.ndarray, congested, threshold=SENSITIVITY_THRESHOLD
              ) -> Attribution:
    """Influence sets and directions at one hour from the sensitivities ``lin``.

    A PCC takes its direction from the worst congested branch it influences:
    +1 (reduce net import) when injecting there lowers that flow, -1 otherwise.
    PCCs that see no congested branch follow the hour's dominant direction.
    """
    ds = lin.ds
    row = {l: k for k, l in enumerate(lin.branches)}
    col = {b: j for j, b in enumerate(lin.buses)}
    congested = sorted(set(congested), key=lambda l: (alpha[l], l))
    influence, direction, sens = {}, {}, {}
    for lec, bus in sorted(network.pcc_buses().items()):
        j = col[bus]
        infl = tuple(l for l in lin.branches if abs(ds[row[l], j]) >= threshold)
        influence[lec] = infl
        sens[lec] = {l: float(ds[row[l], j]) for l in lin.branches}
        hit = [l for l in congested if l in infl]
        if hit:
            direction[lec] = 1 if ds[row[hit[0]], j] < 0 else -1
    default = 1
    if congested:
        worst = row[congested[0]]
        cand = [(abs(ds[worst, col[b]]), -b, lec) for lec, b in network.pcc_buses().items()]
        if cand:
            _, neg_bus, _ = max(cand)
            default = 1 if ds[worst, col[-neg_bus]] < 0 else -1
    for lec in influence:
        direction.setdefault(lec, default)
    return Attribution(lin.hour, influence, direction, sens, tuple(congested))


def hour_injections(network: Network, exchanges: dict, hour: int, flex=None, directions=None,
                    shedding=None) -> PfInjections:
    inj = assemble_injections(network, exchanges, hour, flex, directions)
    if shedding:
        p = inj.p.copy()
        for bus, s in shedding.items():
            p[bus] += s
        inj = PfInjections(p, inj.q, hour)
    return inj


def sheddable(network: Network, exchanges: dict, hour: int) -> dict:
    """Active load available for shedding at each bus (own load plus LEC draws)."""
    out = {}
    for b in network.buses:
        if b.is_slack:
            continue
        load = float(b.load_p[hour]) if len(b.load_p) else 0.0
        out[b.id] = max(load, 0.0)
    for lec, bus in network.pcc_buses().items():
        out[bus] = out.get(bus, 0.0) + max(float(exchanges[lec][0][hour]), 0.0)
    return out


def _tie_ranks(attr: Attribution, lecs, network: Network) -> dict:
    """Rank PCCs by larger sensitivity to the congested set, then lower bus id."""
    pcc = network.pcc_buses()

    def strength(lec):
        infl = attr.influence.get(lec, ())
        # 9 significant digits so float noise never decides a tie
        return float(format(max((abs(attr.sensitivity[lec][l]) for l in infl), default=0.0), ".9g"))

    order = sorted(lecs, key=lambda lec: (-strength(lec), pcc[lec], lec))
    return {lec: k for k, lec in enumerate(order)}


def _clearing_lp(network: Network, lin: Linearization, lecs, prices: dict, directions: dict, upper: dict | None,
                 shed_max: dict, shed_cost: float, dt: float, ratings: np.ndarray, ranks: dict,
                 flex0: dict | None = None, shed0: dict | None = None):
    """Solve one hour's clearing LP; returns (flex, shed, cost, unresolved).

    ``flex0`` / ``shed0`` give the flexibility and shedding already applied at
    the linearization point ``lin``; the LP variables stay absolute amounts.
    """
    pcc = network.pcc_buses()
    col = {b: j for j, b in enumerate(lin.buses)}
    m = Model(f"clearing-{lin.hour}")
    f = {}
    for lec in lecs:
        hi = float("inf") if upper is None else max(float(upper.get(lec, 0.0)), 0.0)
        f[lec] = m.add_variable(0.0, hi, name=f"flex[{lec}]")
    s = {b: m.add_variable(0.0, mx, name=f"shed[{b}]") for b, mx in sorted(shed_max.items()) if mx > 0}
    dinj = [quicksum([]) for _ in lin.buses]
    for lec in lecs:
        dinj[col[pcc[lec]]] += directions[lec] * f[lec]
    for b, var in s.items():
        if b in col:
            dinj[col[b]] += var
    for lec, v in (flex0 or {}).items():
        dinj[col[pcc[lec]]] += -float(directions[lec] * v)
    for b, v in (shed0 or {}).items():
        if b in col:
            dinj[col[b]] += -float(v)
    viol = []
    for k, l in enumerate(lin.branches):
        br = network.branches[l]
        if not br.closed:
            continue
        for e in range(2):
            pe = float(lin.p0[e, k]) + quicksum(float(lin.dp[e, k, j]) * dinj[j] for j in range(len(lin.buses))
                                         if lin.dp[e, k, j] != 0.0)
            qe = float(lin.q0[e, k]) + quicksum(float(lin.dq[e, k, j]) * dinj[j] for j in range(len(lin.buses))
                                         if lin.dq[e, k, j] != 0.0)
            u = m.add_variable(0.0, float("inf"), name=f"excess[{l},{e}]")
            viol.append(u)
            cuts = polygon_cuts(ratings[l])
            tc = tangent_cut(ratings[l], lin.p0[e, k], lin.q0[e, k])
            if tc is not None:
                cuts.append(tc)
            for c, d, r in cuts:
                m.add_constraint(c * pe + d * qe - u, "<=", r)
    scale = max([shed_cost] + [prices[lec] for lec in lecs])
    cost = quicksum((prices[lec] * dt + 1e-9 * scale * (1 + ranks[lec])) * f[lec] for lec in lecs)
    cost += quicksum((shed_cost * dt + 1e-9 * scale * (1 + b)) * var for b, var in s.items())
    cost += quicksum(VIOLATION_WEIGHT * shed_cost * u for u in viol)
    m.set_objective(cost)
    sol = solve_lp(m, SolveOptions(feasibility_tol=1e-9))
    if not sol.is_optimal:
        raise MarketError(f"clearing LP at hour {lin.hour} ended with status {sol.status.value}")
    flex = {lec: max(float(sol.value(f[lec])), 0.0) for lec in lecs}
    shed = {b: max(float(sol.value(var)), 0.0) for b, var in s.items()}
    unresolved = float(sum(sol.value(u) for u in viol))
    money = sum(prices[lec] * dt * flex[lec] for lec in lecs) + shed_cost * dt * sum(shed.values())
    return flex, shed, float(money), unresolved


def required_flexibility(network: Network, exchanges: dict, state: PriceState, tariffs: TariffBook, hour: int,
                         attribution: Attribution | None = None, dt: float = 1.0) -> Requirement:
    """Cheapest flexibility (unbounded offers) and shedding that removes the predicted overloads."""
    inj = hour_injections(network, exchanges, hour)
    sol = solve_newton(network, inj)
    buses = sorted(set(network.pcc_buses().values()) | {b.id for b in network.buses if not b.is_slack})
    lin = sensitivities(network, sol, buses=buses)
    alpha = branch_alpha(network, sol)
    if attribution is None:
        attribution = attribute(network, lin, alpha, [l for l in range(len(alpha)) if alpha[l] < 0])
    lecs = sorted(network.pcc_buses())
    prices = {lec: state.price(hour, lec) for lec in lecs}
    ratings = np.array([br.rating for br in network.branches])
    if np.all(alpha >= 0):
        return Requirement(hour, {lec: 0.0 for lec in lecs}, dict(attribution.direction), {}, 0.0, 0.0)
    flex, shed, cost, unres = _clearing_lp(network, lin, lecs, prices, attribution.direction, None,
                                           sheddable(network, exchanges, hour), tariffs.load_shed_cost, dt,
                                           ratings, _tie_ranks(attribution, lecs, network))
    return Requirement(hour, flex, dict(attribution.direction), shed, cost, unres)


def _verify(network, exchanges, hour, flex, directions, shed, tolerance):
    sol = solve_newton(network, hour_injections(network, exchanges, hour, flex, directions, shed))
    alpha = branch_alpha(network, sol)
    return sol, alpha, bool(np.all(alpha >= -tolerance))


def allocate_hour(network: Network, exchanges: dict, hour: int, offered: dict, prices: dict, directions: dict,
                  attribution: Attribution, shed_cost: float, tolerance: float, dt: float = 1.0):
    """Cleared flexibility and shedding for one hour, verified by AC power flow.

    Returns ``(flex, shed, min_alpha, corrective)``; raises AllocationError when
    neither the regular nor the tightened pass verifies.
    """
    lecs = sorted(offered)
    ranks = _tie_ranks(attribution, lecs, network)
    buses = sorted(set(network.pcc_buses().values()) | {b.id for b in network.buses if not b.is_slack})
    shed_max = sheddable(network, exchanges, hour)
    base_ratings = np.array([br.rating for br in network.branches])
    sol0, alpha0, ok0 = _verify(network, exchanges, hour, offered, directions, None, tolerance)
    # offers already verified within tolerance stay admissible in the LP
    s0 = base_ratings - alpha0
    loose = np.where(alpha0 >= -tolerance, np.maximum(base_ratings, s0), base_ratings)
    for corrective, ratings in ((False, loose), (True, CORRECTIVE_SCALE * base_ratings)):
        sol = sol0
        at_flex, at_shed = offered, {}
        for _ in range(SUCCESSIVE_ROUNDS):
            lin = sensitivities(network, sol, buses=buses)
            flex, shed, _, _ = _clearing_lp(network, lin, lecs, prices, directions, offered, shed_max, shed_cost,
                                            dt, ratings, ranks, at_flex, at_shed)
            flex = {lec: min(v, max(offered[lec], 0.0)) for lec, v in flex.items()}
            sol, alpha, ok = _verify(network, exchanges, hour, flex, directions, shed, tolerance)
            at_flex, at_shed = flex, shed
            if ok:
                return flex, shed, float(alpha.min()), corrective
        if not corrective and ok0:
            return {lec: max(offered[lec], 0.0) for lec in lecs}, {}, float(alpha0.min()), False
    raise AllocationError(f"allocation at hour {hour} failed AC verification after the corrective pass")


def final_allocation(network: Network, tariffs: TariffBook, exchanges: dict, bids: dict, state: PriceState,
                     attributions: dict, tolerance: float, dt: float = 1.0,
                     requirements: dict | None = None) -> Allocation:
    """Clear every congested hour: ``0 <= cleared <= offered`` at the final prices.

    ``bids[lec]`` maps hour to offered kW; ``requirements`` (hour -> Requirement)
    only feeds the report column, the clearing itself does not use it.
    """
    hours = tuple(state.hours)
    cleared, offered, prices, dirs, shedding, req, mins = {}, {}, {}, {}, {}, {}, {}
    corrective = []
    cost = 0.0
    for h in hours:
        attr = attributions[h]
        off = {lec: float(bids[lec].get(h, 0.0)) for lec in sorted(network.pcc_buses())}
        pr = {lec: state.price(h, lec) for lec in off}
        flex, shed, amin, corr = allocate_hour(network, exchanges, h, off, pr, attr.direction, attr,
                                               tariffs.load_shed_cost, tolerance, dt)
        if corr:
            corrective.append(h)
        mins[h] = amin
        for lec in off:
            cleared[(h, lec)] = flex[lec]
            offered[(h, lec)] = off[lec]
            prices[(h, lec)] = pr[lec]
            dirs[(h, lec)] = attr.direction[lec]
            cost += pr[lec] * dt * flex[lec]
        for b, v in shed.items():
            if v > 0:
                shedding[(h, b)] = v
                cost += tariffs.load_shed_cost * dt * v
        req[h] = requirements[h].total if requirements and h in requirements else float(sum(flex.values()))
    return Allocation(hours, cleared, offered, prices, dirs, shedding, req, float(cost), True, tuple(corrective),
                      mins)
