"""Nodal flexibility prices and their penalty-driven update."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.types import MarketParams, Network, TariffBook


class MarketError(RuntimeError):
    pass


class IterationBudgetError(MarketError):
    pass


@dataclass(frozen=True)
class PriceState:
    """Prices keyed by ``(hour, lec_id)`` (SEK/kWh).

    ``penalties`` holds one ``{(hour, lec): rho}`` mapping per completed update;
    ``frozen`` lists hours whose congestion was relieved.
    """

    iteration: int = 0
    prices: dict = field(default_factory=dict)
    penalties: tuple = ()
    frozen: frozenset = frozenset()

    @property
    def hours(self) -> list:
        return sorted({h for h, _ in self.prices})

    def price(self, hour: int, lec: str) -> float:
        return self.prices.get((hour, lec), 0.0)

    def last_penalty(self, hour: int, lec: str) -> float:
        return self.penalties[-1].get((hour, lec), 0.0) if self.penalties else 0.0


def init_price(tariffs: TariffBook, hours, lecs) -> PriceState:
    """Start every PCC at the energy price of each congested hour."""
    lam = tariffs.energy()
    prices = {(int(h), lec): float(lam[h]) for h in sorted(hours) for lec in sorted(lecs)}
    return PriceState(0, prices)


def penalty(params: MarketParams, energy_price: float, iteration: int, violation: float) -> float:
    """``c1 * lambda_e * (c2 + c3 * exp(c4 * k)) * v`` with ``v >= 0``."""
    v = max(float(violation), 0.0)
    return params.c1 * energy_price * (params.c2 + params.c3 * math.exp(params.c4 * iteration)) * v


def update_price(state: PriceState, violations: dict, params: MarketParams, tariffs: TariffBook,
                 frozen=()) -> PriceState:
    """One price step; ``violations[(hour, lec)]`` is the normalised overload seen by that PCC.

    Frozen hours keep their prices whatever the reported violation.
    """
    if state.iteration >= params.max_iterations:
        raise IterationBudgetError(f"iteration budget of {params.max_iterations} exhausted")
    lam = tariffs.energy()
    frozen = frozenset(state.frozen) | frozenset(frozen)
    prices = dict(state.prices)
    rho = {}
    for (h, lec), p in state.prices.items():
        r = 0.0 if h in frozen else penalty(params, float(lam[h]), state.iteration, violations.get((h, lec), 0.0))
        rho[(h, lec)] = r
        prices[(h, lec)] = p + r
    return replace(state, iteration=state.iteration + 1, prices=prices, penalties=state.penalties + (rho,),
                   frozen=frozen)


def normalized_violation(network: Network, alpha: np.ndarray, branches) -> float:
    """Worst ``max(0, -alpha) / rating`` among ``branches`` (alpha per branch, one hour)."""
    worst = 0.0
    for l in branches:
        rating = network.branches[l].rating
        worst = max(worst, max(0.0, -float(alpha[l])) / rating)
    return worst
