"""End-to-end market run: baselines, congestion check, negotiation, allocation,
commitments, rebound verification and settlement.

The coordinator only handles decoded messages, so everything the DSO knows
about a LEC crossed the boundary as PCC-level data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..core.scenario import load_scenario, validate_scenario
from ..core.types import Scenario
from ..lec import FlexBid
from ..market import (Allocation, NegotiationResult, PriceState, ReboundResult, SettlementReport,
                      attributions_for, congested_hours, final_allocation, negotiate, rebound_check,
                      required_flexibility, settle)
from ..milp import SolveOptions
from ..powerflow import branch_alpha
from .messages import Message
from .transport import LECAgent, make_transport


class StageError(RuntimeError):
    """A module error, tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, error: Exception):
        self.stage = stage
        self.error = error
        super().__init__(f"{stage}: {type(error).__name__}: {error}")


@dataclass
class RunConfig:
    scenario: str | Path | Scenario
    out_dir: str | Path | None = None
    max_iterations: int | None = None
    congestion_tolerance: float | None = None
    deviation_cap: float | None = None
    transport: str = "in-process"
    seed: int | None = None


@dataclass
class MarketOutcome:
    scenario: Scenario
    converged: bool
    negotiation_converged: bool
    iterations: int
    congested_hours: tuple
    prices: PriceState
    offered: dict
    allocation: Allocation | None
    requirements: dict
    baselines: dict
    commitments: dict
    settlement: SettlementReport
    trace: list
    rebound: ReboundResult
    baseline_min_alpha: np.ndarray
    rebound_rounds: int = 0
    rebound_hours: tuple = ()
    messages: list = field(default_factory=list)

    @property
    def shedding(self) -> float:
        return self.allocation.total_shedding if self.allocation is not None else 0.0

    @property
    def exit_code(self) -> int:
        if not self.converged:
            return 3
        return 2 if self.shedding > 1e-9 else 0


def _exchanges(msgs: dict) -> dict:
    return {lec: (np.asarray(m.payload["p"], dtype=float), np.asarray(m.payload["q"], dtype=float))
            for lec, m in msgs.items()}


def _apply_overrides(scenario: Scenario, config: RunConfig) -> Scenario:
    market = scenario.market
    if config.max_iterations is not None:
        market = replace(market, max_iterations=int(config.max_iterations))
    if config.congestion_tolerance is not None:
        market = replace(market, congestion_tolerance=float(config.congestion_tolerance))
    if config.deviation_cap is not None:
        market = replace(market, deviation_cap=float(config.deviation_cap))
    return validate_scenario(replace(scenario, market=market))


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_scenario(scenario: Scenario, transport: str = "in-process", options: SolveOptions | None = None
                 ) -> MarketOutcome:
    net, tariffs, params = scenario.network, scenario.tariffs, scenario.market
    horizon, dt, tol = scenario.horizon, scenario.dt, scenario.market.congestion_tolerance
    agents = [LECAgent(spec, tariffs, horizon, dt, options) for spec in scenario.lecs]
    link = make_transport(transport, agents)
    try:
        base_msgs = _stage("baseline", link.open)
        baselines = _exchanges(base_msgs)
        base_costs = {lec: dict(m.payload["costs"]) for lec, m in base_msgs.items()}
        base_sols, hours = _stage("powerflow", congested_hours, net, baselines, horizon, tol)
        base_min = np.array([float(np.min(branch_alpha(net, s))) for s in base_sols])
        lecs = sorted(baselines)
        pcc = net.pcc_buses()

        def bidder(signals):
            msgs = {lec: Message("FlexSignal", "dso", bidder.iteration,
                                 {"lec": lec, "pcc": pcc[lec], "hours": list(s.hours), "prices": list(s.prices),
                                  "directions": list(s.directions), "deviation_cap": s.deviation_cap}) for lec, s in signals.items()}
            bidder.iteration += 1
            replies = link.exchange(msgs)
            return {lec: FlexBid(lec, tuple(r.payload["hours"]), tuple(r.payload["flex_max"]),
                                 r.payload["objective"], r.payload["operating_cost"]) for lec, r in replies.items()}

        bidder.iteration = 1
        if not hours:
            rebound = _stage("rebound", rebound_check, net, baselines, horizon, tol)
            notes = {lec: Message("SettlementNotice", "dso", 0, {"lec": lec, "revenue": 0.0, "cost_delta": 0.0})
                     for lec in lecs}
            link.notify(notes)
            settlement = settle(base_costs, base_costs, None, tariffs, dt)
            return MarketOutcome(scenario, rebound.ok, True, 0, (), PriceState(), {}, None, {}, baselines,
                                 baselines, settlement, [], rebound, base_min, messages=list(link.log))
        active = sorted(hours)
        rebound_hours: list = []
        trace: list = []
        rounds = 0
        attrs = _stage("market", attributions_for, net, baselines, active, tol)
        while True:
            neg: NegotiationResult = _stage("market", negotiate, net, tariffs, params, baselines, bidder, active,
                                            attrs)
            trace.extend((rounds, row) for row in neg.trace)
            reqs = {h: _stage("market", required_flexibility, net, baselines, neg.state, tariffs, h, attrs[h], dt)
                    for h in active}
            alloc = _stage("allocation", final_allocation, net, tariffs, baselines, neg.bids, neg.state, attrs, tol,
                           dt, reqs)
            notices = {}
            for lec in lecs:
                notices[lec] = Message("AllocationNotice", "dso", neg.iterations,
                                       {"lec": lec, "hours": list(active),
                                        "accepted": [alloc.cleared[(h, lec)] for h in active],
                                        "prices": [alloc.prices[(h, lec)] for h in active],
                                        "directions": [alloc.directions[(h, lec)] for h in active],
                                        "deviation_cap": params.deviation_cap})
            commit_msgs = _stage("commitment", link.exchange, notices)
            commits = _exchanges(commit_msgs)
            rebound = _stage("rebound", rebound_check, net, commits, horizon, tol, alloc.shedding)
            new = sorted({t for _, t, _ in rebound.violations} - set(active))
            if not new or rounds >= params.rebound_rounds:
                break
            rounds += 1
            rebound_hours.extend(new)
            # directions for rebound hours come from the point where the overload appeared
            attrs.update(_stage("market", attributions_for, net, commits, new, tol))
            active = sorted(set(active) | set(new))
        commit_costs = {lec: dict(m.payload["costs"]) for lec, m in commit_msgs.items()}
        settlement = settle(base_costs, commit_costs, alloc, tariffs, dt)
        notes = {lec: Message("SettlementNotice", "dso", neg.iterations,
                              {"lec": lec, "revenue": settlement.lec_revenue[lec],
                               "cost_delta": settlement.lec_cost_delta[lec]}) for lec in lecs}
        link.notify(notes)
        converged = rebound.ok
        return MarketOutcome(scenario, converged, neg.converged, neg.iterations, tuple(active), neg.state, neg.bids,
                             alloc, reqs, baselines, commits, settlement, trace, rebound, base_min, rounds,
                             tuple(rebound_hours), list(link.log))
    finally:
        link.close()


def run_market(config: RunConfig, options: SolveOptions | None = None) -> MarketOutcome:
    """Load, override, run and (when ``out_dir`` is set) write reports."""
    if isinstance(config.scenario, Scenario):
        scenario = config.scenario
    else:
        scenario = _stage("scenario", load_scenario, config.scenario)
    scenario = _stage("scenario", _apply_overrides, scenario, config)
    outcome = run_scenario(scenario, config.transport, options)
    if config.out_dir is not None:
        from .reports import write_reports

        _stage("reports", write_reports, outcome, config.out_dir)
    return outcome
