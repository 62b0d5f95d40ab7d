"""DSO side of the flexibility market: prices, clearing, negotiation and settlement."""

from .clearing import (Allocation, AllocationError, Attribution, Requirement, allocate_hour, attribute,
                       final_allocation, hour_injections, required_flexibility, sheddable)
from .negotiation import NegotiationResult, TraceRow, attributions_for, congested_hours, negotiate
from .prices import (IterationBudgetError, MarketError, PriceState, init_price, normalized_violation, penalty,
                     update_price)
from .settlement import ReboundResult, SettlementReport, rebound_check, settle, stakeholder_flow_total

__all__ = [
    "Allocation", "AllocationError", "Attribution", "IterationBudgetError", "MarketError", "NegotiationResult",
    "PriceState", "ReboundResult", "Requirement", "SettlementReport", "TraceRow", "allocate_hour", "attribute",
    "attributions_for", "congested_hours", "final_allocation", "hour_injections", "init_price", "negotiate",
    "normalized_violation", "penalty", "rebound_check", "required_flexibility", "settle", "sheddable",
    "stakeholder_flow_total", "update_price",
]
