"""Iterative price negotiation between the DSO and the LECs.

The DSO only sees PCC-level data: baseline exchanges and, each round, the
offered flexibility per congestion hour. LECs are reached through a
``bidder`` callable mapping ``{lec: FlexSignal}`` to ``{lec: FlexBid}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..core.types import MarketParams, Network, TariffBook
from ..lec.agent import FlexSignal
from ..powerflow import branch_alpha, sensitivities, solve_newton
from .clearing import attribute, hour_injections
from .prices import PriceState, init_price, normalized_violation, update_price

@dataclass(frozen=True)
class TraceRow:
    iteration: int
    hour: int
    lec: str
    price: float
    penalty: float
    worst_alpha: float
    offered: float


@dataclass
class NegotiationResult:
    state: PriceState
    bids: dict
    signals: dict
    attributions: dict
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)
    relieved_at: dict = field(default_factory=dict)


def congested_hours(network: Network, exchanges: dict, horizon: int, tolerance: float) -> tuple[list, list]:
    """AC-solve every hour of the exchanges; returns (solutions, congested hours)."""
    sols = [solve_newton(network, hour_injections(network, exchanges, t)) for t in range(horizon)]
    hours = [t for t, s in enumerate(sols) if np.any(branch_alpha(network, s) < -tolerance)]
    return sols, hours


def attributions_for(network: Network, exchanges: dict, hours, tolerance: float) -> dict:
    out = {}
    buses = sorted({b.id for b in network.buses if not b.is_slack})
    for h in hours:
        sol = solve_newton(network, hour_injections(network, exchanges, h))
        alpha = branch_alpha(network, sol)
        lin = sensitivities(network, sol, buses=buses)
        out[h] = attribute(network, lin, alpha, [l for l in range(len(alpha)) if alpha[l] < -tolerance])
    return out


def _signals(lecs, hours, state: PriceState, attributions: dict, cap: float) -> dict:
    return {lec: FlexSignal(lec, tuple(hours), tuple(state.price(h, lec) for h in hours),
                            tuple(attributions[h].direction[lec] for h in hours), cap) for lec in lecs}


def negotiate(network: Network, tariffs: TariffBook, params: MarketParams, exchanges: dict,
              bidder: Callable[[dict], dict], hours, attributions: dict | None = None) -> NegotiationResult:
    """Raise nodal prices until the offered flexibility relieves every congested hour.

    A relieved hour keeps its prices while it stays relieved; if later bids
    move flexibility away and it congests again, its prices resume rising.
    """
    tol = params.congestion_tolerance
    hours = sorted(int(h) for h in hours)
    lecs = sorted(network.pcc_buses())
    if attributions is None:
        attributions = attributions_for(network, exchanges, hours, tol)
    state = init_price(tariffs, hours, lecs)
    frozen: set = set()
    relieved_at: dict = {}
    trace: list = []
    offered: dict = {lec: {} for lec in lecs}
    signals: dict = {}
    converged = False
    it = 0
    for it in range(1, params.max_iterations + 1):
        signals = _signals(lecs, hours, state, attributions, params.deviation_cap)
        bids = bidder(signals)
        offered = {lec: dict(zip(bids[lec].hours, bids[lec].flex_max)) for lec in lecs}
        violations = {}
        all_ok = True
        for h in hours:
            attr = attributions[h]
            flex = {lec: offered[lec].get(h, 0.0) for lec in lecs}
            sol = solve_newton(network, hour_injections(network, exchanges, h, flex, attr.direction))
            alpha = branch_alpha(network, sol)
            ok = bool(np.all(alpha >= -tol))
            all_ok &= ok
            for lec in lecs:
                violations[(h, lec)] = normalized_violation(network, alpha, attr.influence[lec])
                trace.append(TraceRow(it, h, lec, state.price(h, lec), state.last_penalty(h, lec),
                                      float(alpha.min()), flex[lec]))
            if ok and h not in frozen:
                frozen.add(h)
                relieved_at[h] = it
            elif not ok and h in frozen:
                frozen.discard(h)
                relieved_at.pop(h, None)
        if all_ok:
            converged = True
            break
        if it == params.max_iterations:
            break
        state = update_price(replace(state, frozen=frozenset(frozen)), violations, params, tariffs)
    return NegotiationResult(replace(state, frozen=frozenset(frozen)), offered, signals, attributions, converged,
                             it, trace, relieved_at)
