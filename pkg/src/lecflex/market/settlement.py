"""Rebound verification and the financial ledger against the baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.types import Network, TariffBook
from ..powerflow import branch_alpha, solve_newton
from .clearing import Allocation, hour_injections

RETAILER_ENERGY_TERMS = ("energy",)
RETAILER_HEAT_TERMS = ("heat", "heat_peak", "heat_fixed")


@dataclass
class ReboundResult:
    violations: list
    min_alpha: np.ndarray
    solutions: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def rebound_check(network: Network, exchanges: dict, horizon: int, tolerance: float,
                  shedding: dict | None = None) -> ReboundResult:
    """Full-horizon AC check of the delivered exchanges; violations are ``(branch, hour, alpha)``."""
    shedding = shedding or {}
    violations = []
    mins = np.zeros(horizon)
    sols = []
    for t in range(horizon):
        shed = {b: v for (h, b), v in shedding.items() if h == t}
        sol = solve_newton(network, hour_injections(network, exchanges, t, shedding=shed))
        alpha = branch_alpha(network, sol)
        mins[t] = float(alpha.min()) if alpha.size else 0.0
        sols.append(sol)
        for l in np.flatnonzero(alpha < -tolerance):
            violations.append((int(l), t, float(alpha[l])))
    return ReboundResult(violations, mins, sols)


@dataclass
class SettlementReport:
    """Cost and income changes with respect to the baseline (SEK)."""

    dso_cost: float
    flexibility_payments: float
    shedding_payment: float
    lec_revenue: dict
    lec_cost_delta: dict
    lec_terms_delta: dict
    energy_retailer_delta: float
    heat_retailer_delta: float
    network_tariff_delta: float
    conservation_residual: float

    @property
    def lec_net_benefit(self) -> dict:
        return {lec: self.lec_revenue[lec] - self.lec_cost_delta[lec] for lec in self.lec_revenue}

    def flow_total(self) -> float:
        return stakeholder_flow_total(self.energy_retailer_delta, self.heat_retailer_delta,
                                      sum(self.lec_cost_delta.values()), self.lec_revenue.values())


def stakeholder_flow_total(energy_retailer: float, heat_retailer: float, lec_cost_increase: float,
                           revenues) -> float:
    """Sum of the money flows that a DSO cost increase is split into."""
    return float(energy_retailer + heat_retailer + lec_cost_increase + sum(revenues))


def settle(baseline_costs: dict, committed_costs: dict, allocation: Allocation | None,
           tariffs: TariffBook, dt: float = 1.0) -> SettlementReport:
    """Pay-as-bid ledger at the final nodal prices.

    ``*_costs`` map LEC id to the operating-cost terms reported with each
    schedule (``energy``, ``network_tariff``, ``heat``, ``heat_peak``,
    ``heat_fixed``, ``fuel``, ``degradation``).
    """
    lecs = sorted(baseline_costs)
    revenue = {lec: 0.0 for lec in lecs}
    shed_pay = 0.0
    if allocation is not None:
        for (h, lec), v in sorted(allocation.cleared.items()):
            revenue[lec] += allocation.prices[(h, lec)] * dt * v
        shed_pay = tariffs.load_shed_cost * dt * allocation.total_shedding
    flex_pay = float(sum(revenue.values()))
    dso_cost = flex_pay + shed_pay
    terms_delta = {}
    cost_delta = {}
    lec_resid = 0.0
    for lec in lecs:
        b, c = baseline_costs[lec], committed_costs[lec]
        d = {k: float(c[k] - b[k]) for k in sorted(b)}
        terms_delta[lec] = d
        cost_delta[lec] = float(sum(c.values()) - sum(b.values()))
        lec_resid = max(lec_resid, abs(cost_delta[lec] - sum(d.values())))
    energy = float(sum(terms_delta[lec][k] for lec in lecs for k in RETAILER_ENERGY_TERMS))
    heat = float(sum(terms_delta[lec][k] for lec in lecs for k in RETAILER_HEAT_TERMS))
    tariff = float(sum(terms_delta[lec]["network_tariff"] for lec in lecs))
    residual = abs(dso_cost - flex_pay - shed_pay) + lec_resid
    return SettlementReport(dso_cost, flex_pay, shed_pay, revenue, cost_delta, terms_delta, energy, heat, tariff,
                            residual)
